use std::process::ExitCode;

fn main() -> ExitCode {
    hcscale_cli::main_with(std::env::args_os())
}
