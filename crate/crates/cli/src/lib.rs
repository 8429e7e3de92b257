//! Library side of the `fairprompt` command-line tool.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use args::Cli;
pub use commands::run_with_pool;
pub use config::{LoadedConfig, RunConfig};
pub use error::{exit_code, CliError};
