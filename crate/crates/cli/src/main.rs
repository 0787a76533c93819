use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lbaudit_cli::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match lbaudit_cli::execute(&cli) {
        Ok(stdout) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(stdout.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(lbaudit_cli::exit_code(&err))
        }
    }
}
