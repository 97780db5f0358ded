use std::process::ExitCode;

use butterfly_cli::{run, Cli, CliError, Outcome, EXIT_FAIL, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(&cli) {
        Ok(Outcome::Done) | Ok(Outcome::Verified(true)) => ExitCode::from(EXIT_OK),
        Ok(Outcome::Verified(false)) => ExitCode::from(EXIT_FAIL),
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
