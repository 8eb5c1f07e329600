//! Experiment kinds, their parameters and how flags and config files combine
//! into a fully resolved [`SweepSpec`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{value_parser, Arg, ArgMatches, Command};

use crate::grid::{parse_grid, parse_int_grid, parse_number};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    MimoBound,
    EqDecay,
    Lln,
    Scaling,
    Protocol,
    Lemma7,
    Lemma8,
}

/// One experiment parameter: flag and config key, default and help text.
#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn p(name: &'static str, default: &'static str, help: &'static str) -> Param {
    Param { name, default, help }
}

const MIMO: &[Param] = &[
    p("n-nodes", "16", "nodes per cluster (grid)"),
    p("d", "1", "cluster side D"),
    p("l", "2", "centre separation L (grid)"),
    p("lambda", "2^-6", "wavelength (grid)"),
    p("alpha", "2", "path-loss exponent"),
    p("power", "1", "transmit power per node"),
    p("gain", "1", "antenna gain G"),
    p("interference", "none", "none, tdma, psd or cycle"),
    p("instances", "10", "random instances per grid point"),
];

const EQ_DECAY: &[Param] = &[
    p("d", "1", "cluster side D"),
    p("l", "2", "centre separation L"),
    p("lambda", "2^-3:2^-12:x0.5", "wavelength (grid)"),
    p("alpha", "2", "path-loss exponent"),
    p("trials", "10000", "independent blocks per point"),
    p("block", "32", "receive nodes per block"),
];

const LLN: &[Param] = &[
    p("d", "1", "cluster side D"),
    p("l", "8", "centre separation L"),
    p("lambda", "2^-3", "wavelength (grid)"),
    p("alpha", "2", "path-loss exponent"),
    p("sizes", "64,128", "nested cluster sizes (grid)"),
    p("seeds", "10", "independent placements"),
    p("trials", "100000", "Monte Carlo blocks for the reference estimate"),
    p("block", "32", "receive nodes per Monte Carlo block"),
];

const SCALING: &[Param] = &[
    p("n", "1024:1048576:x4", "node count (grid)"),
    p("beta", "1", "wavelength exponent, lambda = n^-beta (grid)"),
    p("h", "3", "hierarchy levels"),
    p("regime", "dense", "dense or extended"),
    p("alpha", "2", "path-loss exponent"),
];

const PROTOCOL: &[Param] = &[
    p("n", "1024:1048576:x4", "node count (grid)"),
    p("beta", "1", "wavelength exponent, lambda = n^-beta (grid)"),
    p("h", "3", "hierarchy levels"),
    p("q", "3", "quantised subblocks per observation"),
];

const LEMMA7: &[Param] = &[p("instances", "1000", "random integrands")];

const LEMMA8: &[Param] = &[
    p("d", "1", "cluster side D"),
    p("l", "2", "centre separation L"),
    p("instances", "100000", "random transmit pairs"),
];

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::MimoBound,
        Kind::EqDecay,
        Kind::Lln,
        Kind::Scaling,
        Kind::Protocol,
        Kind::Lemma7,
        Kind::Lemma8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::MimoBound => "mimo-bound",
            Kind::EqDecay => "eq-decay",
            Kind::Lln => "lln",
            Kind::Scaling => "scaling",
            Kind::Protocol => "protocol",
            Kind::Lemma7 => "lemma7",
            Kind::Lemma8 => "lemma8",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Kind::MimoBound => "Mutual information against the explicit MIMO lower bound",
            Kind::EqDecay => "Monte Carlo E[Q] against the wavelength",
            Kind::Lln => "Full sample means of Q over growing clusters",
            Kind::Scaling => "Predicted throughput exponents and bounds",
            Kind::Protocol => "Slot accounting of the three-phase scheme per level",
            Kind::Lemma7 => "Oscillatory integral bound on random integrands",
            Kind::Lemma8 => "Corner angle bound on random transmit pairs",
        }
    }

    pub fn params(self) -> &'static [Param] {
        match self {
            Kind::MimoBound => MIMO,
            Kind::EqDecay => EQ_DECAY,
            Kind::Lln => LLN,
            Kind::Scaling => SCALING,
            Kind::Protocol => PROTOCOL,
            Kind::Lemma7 => LEMMA7,
            Kind::Lemma8 => LEMMA8,
        }
    }

    fn command(self) -> Command {
        let cmd = Command::new(self.name()).about(self.about());
        let cmd = self.params().iter().fold(cmd, |cmd, p| {
            cmd.arg(
                Arg::new(p.name)
                    .long(p.name)
                    .value_name("VALUE")
                    .help(format!("{} [default: {}]", p.help, p.default)),
            )
        });
        cmd.arg(
            Arg::new("seed")
                .long("seed")
                .value_parser(value_parser!(u64))
                .help("master seed [default: 0]"),
        )
        .arg(
            Arg::new("jobs")
                .long("jobs")
                .value_parser(value_parser!(usize))
                .help("concurrent grid points [default: $HCSCALE_JOBS or all cores]"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_parser(value_parser!(PathBuf))
                .help("CSV path [default: stdout]"),
        )
        .arg(
            Arg::new("config")
                .long("config")
                .value_parser(value_parser!(PathBuf))
                .help("key = value file; flags take precedence"),
        )
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown experiment {s:?}")))
    }
}

pub fn command() -> Command {
    Command::new("hcscale")
        .version(hcscale::VERSION)
        .about("Capacity-scaling experiments for line-of-sight wireless networks")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands(Kind::ALL.map(Kind::command))
}

/// A fully resolved experiment: every parameter has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: Kind,
    /// Parameter values in declaration order.
    pub values: Vec<(&'static str, String)>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl SweepSpec {
    /// Defaults for `kind`.
    pub fn new(kind: Kind) -> Self {
        Self {
            kind,
            values: kind.params().iter().map(|p| (p.name, p.default.to_string())).collect(),
            seed: 0,
            out: None,
        }
    }

    /// Sets a parameter; `seed` and `out` are accepted as keys too.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("seed must be a nonnegative integer, got {value:?}")))?
            }
            "out" => self.out = Some(PathBuf::from(value.trim())),
            _ => {
                let slot = self
                    .values
                    .iter_mut()
                    .find(|(k, _)| *k == key)
                    .ok_or_else(|| CliError::Usage(format!("{} has no parameter {key:?}", self.kind)))?;
                slot.1 = value.trim().to_string();
            }
        }
        Ok(())
    }

    pub fn with(mut self, key: &str, value: &str) -> Result<Self, CliError> {
        self.set(key, value)?;
        Ok(self)
    }

    pub fn text(&self, key: &str) -> &str {
        self.values
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("{} declares no parameter {key}", self.kind))
    }

    fn named(&self, key: &str, e: CliError) -> CliError {
        match e {
            CliError::Usage(msg) => CliError::Usage(format!("--{key}: {msg}")),
            other => other,
        }
    }

    pub fn grid(&self, key: &str) -> Result<Vec<f64>, CliError> {
        parse_grid(self.text(key)).map_err(|e| self.named(key, e))
    }

    pub fn int_grid(&self, key: &str) -> Result<Vec<u64>, CliError> {
        parse_int_grid(self.text(key)).map_err(|e| self.named(key, e))
    }

    pub fn number(&self, key: &str) -> Result<f64, CliError> {
        parse_number(self.text(key)).map_err(|e| self.named(key, e))
    }

    /// A positive integer parameter.
    pub fn count(&self, key: &str) -> Result<usize, CliError> {
        match self.int_grid(key)?.as_slice() {
            [v] if *v >= 1 => Ok(*v as usize),
            _ => Err(CliError::Usage(format!("--{key} must be a single positive integer"))),
        }
    }

    /// Comment lines identifying the run. The output path and job count are
    /// left out since they do not change the results.
    pub fn header(&self) -> Vec<String> {
        let mut lines = vec![
            format!("hcscale {}", hcscale::VERSION),
            format!("experiment = {}", self.kind),
            format!("seed = {}", self.seed),
        ];
        lines.extend(self.values.iter().map(|(k, v)| format!("{k} = {v}")));
        lines
    }
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are ignored.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key or value", no + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(CliError::Usage(format!("config line {}: {k} set twice", no + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// What to run and with how many workers.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub spec: SweepSpec,
    pub jobs: Option<usize>,
}

/// Resolves parsed arguments: defaults, then the config file, then flags.
pub fn resolve(matches: &ArgMatches) -> Result<Invocation, CliError> {
    let (name, sub) = matches
        .subcommand()
        .ok_or_else(|| CliError::Usage("no experiment given".into()))?;
    let kind: Kind = name.parse()?;
    let mut spec = SweepSpec::new(kind);
    if let Some(path) = sub.get_one::<PathBuf>("config") {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        for (k, v) in parse_config(&text)? {
            spec.set(&k, &v)?;
        }
    }
    for p in kind.params() {
        if let Some(v) = sub.get_one::<String>(p.name) {
            spec.set(p.name, v)?;
        }
    }
    if let Some(seed) = sub.get_one::<u64>("seed") {
        spec.seed = *seed;
    }
    if let Some(out) = sub.get_one::<PathBuf>("out") {
        spec.out = Some(out.clone());
    }
    let jobs = sub.get_one::<usize>("jobs").copied();
    if jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    Ok(Invocation { spec, jobs })
}
