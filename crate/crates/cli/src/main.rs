use std::process::ExitCode;

use clap::Parser;
use fairprompt_cli::{exit_code, run_with_pool, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_with_pool(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
