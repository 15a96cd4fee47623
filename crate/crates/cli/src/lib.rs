//! Command-line front end for the bidomain solvers: TOML run descriptions,
//! subcommand pipelines and result files.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{run, Cli, Command};
pub use config::{parse_config, parse_str, RunConfig};
pub use error::{CliError, CliResult};
