//! Command-line experiment runner for the `hcscale` library.
//!
//! Each subcommand sweeps a parameter grid, evaluates the grid points in
//! parallel and writes one CSV row per point in grid order, preceded by `#`
//! comment lines that record the version and every resolved parameter.

pub mod experiments;
pub mod grid;
pub mod spec;

use std::ffi::OsString;
use std::io::{self, Write};
use std::process::ExitCode;

use thiserror::Error;

pub use experiments::Table;
pub use spec::{Kind, SweepSpec};

/// Environment variable holding the default worker count.
pub const JOBS_ENV: &str = "HCSCALE_JOBS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("computation failed: {0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<hcscale::Error> for CliError {
    fn from(e: hcscale::Error) -> Self {
        match e {
            hcscale::Error::InvalidArgument(_) | hcscale::Error::Precondition(_) => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Writes the comment header and the table as RFC 4180 CSV.
pub fn write_csv<W: Write>(out: W, spec: &SweepSpec, table: &Table) -> Result<(), CliError> {
    let mut out = io::BufWriter::new(out);
    let io_err = |e: io::Error| CliError::Io(e.to_string());
    for line in spec.header() {
        write!(out, "# {line}\r\n").map_err(io_err)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(io_err)
}

/// Renders a run to bytes, exactly as it would be written to a file.
pub fn render(spec: &SweepSpec, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, spec, table)?;
    Ok(buf)
}

fn default_jobs() -> Result<usize, CliError> {
    match std::env::var(JOBS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Usage(format!(
                "{JOBS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, usize::from)),
    }
}

/// Runs `spec` on `jobs` worker threads.
pub fn execute(spec: &SweepSpec, jobs: usize) -> Result<Table, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Compute(e.to_string()))?;
    pool.install(|| experiments::run(spec))
}

fn run_args(args: Vec<OsString>) -> Result<Table, CliError> {
    let matches = match spec::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            // help and version requests also arrive here
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let inv = spec::resolve(&matches)?;
    let jobs = match inv.jobs {
        Some(j) => j,
        None => default_jobs()?,
    };
    let table = execute(&inv.spec, jobs)?;
    match &inv.spec.out {
        Some(path) => {
            // render first so a failed run never truncates an existing file
            let bytes = render(&inv.spec, &table)?;
            std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        }
        None => write_csv(io::stdout().lock(), &inv.spec, &table)?,
    }
    Ok(table)
}

/// Entry point shared by the binary: 0 on success, 1 when an inequality check
/// fails, 2 on usage errors and 3 on I/O errors.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> ExitCode {
    match run_args(args.into_iter().collect()) {
        Ok(table) => {
            eprintln!("{}", table.summary);
            if table.violations > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("hcscale: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
