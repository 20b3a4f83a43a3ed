use std::process::ExitCode;

use clap::Parser;
use svcrb_cli::{execute, Cli, CliError, ErrorKind};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::new(ErrorKind::Usage, e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.kind.exit_code());
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.kind.exit_code())
        }
    }
}
