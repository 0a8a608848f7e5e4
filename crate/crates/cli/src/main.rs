use std::process::ExitCode;

use clap::Parser;
use kirchhoff_cli::{run, Cli, Outcome, SEED_VAR};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = std::env::var(SEED_VAR).ok();
    let result = cli
        .into_config(seed.as_deref())
        .and_then(|config| run(&config));
    match result {
        Ok(outcome) => {
            if let Outcome::Report(report) = &outcome {
                for c in report.failed() {
                    eprintln!(
                        "check failed: {} (measured {:e}, tolerance {:e})",
                        c.name, c.measured, c.tolerance
                    );
                }
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
