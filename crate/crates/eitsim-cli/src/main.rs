mod config;
mod experiments;
mod pool;

use clap::Parser;
use config::{Cli, ConfigError};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let resolved = match config::resolve(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match experiments::run(&resolved) {
        Ok(experiments::Outcome::Success) => ExitCode::SUCCESS,
        Ok(experiments::Outcome::ValidationFailed) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(e) => {
            // Remaining failures are environment or configuration problems.
            eprintln!("error: {e:#}");
            match e.downcast_ref::<ConfigError>() {
                Some(_) => ExitCode::from(2),
                None => ExitCode::from(2),
            }
        }
    }
}
