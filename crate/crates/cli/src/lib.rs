//! Configuration parsing and subcommands behind the `duovortex` binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_check, cmd_oracle, cmd_solve, CliError, Outcome, Status};
pub use config::{ConfigError, RunConfig};
