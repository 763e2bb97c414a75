//! Command-line driver: argument handling, the `--ham` mini-syntax, and
//! JSON/CSV serialization of reports, trajectories and point clouds.
//!
//! Exit codes: 0 on success, 2 for input errors, 3 when the mathematics is
//! internally inconsistent (e.g. disagreeing routes on a rank-stable state).

pub mod commands;
pub mod config;
pub mod error;
pub mod hamspec;

use std::fs;
use std::io::Write;

pub use config::{Cli, RunConfig};
pub use error::CliError;

/// Runs a parsed command line, writing to `--out` or stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::from_cli(cli)?;
    let outcome = commands::execute(&config)?;
    let to_file = !matches!(config.command, config::Command::Flow { .. });
    match (&config.out, to_file) {
        (Some(path), true) => fs::write(path, &outcome.output)?,
        _ => std::io::stdout().write_all(&outcome.output)?,
    }
    match outcome.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
