//! Command-line front end: configuration loading, command dispatch and
//! CSV / metadata / gnuplot output.

pub mod commands;
pub mod config;
pub mod output;
pub mod report;

pub use commands::{run, Cli, CliError, Command};
pub use config::{load_config, parse_config, ConfigError, RunConfig};
