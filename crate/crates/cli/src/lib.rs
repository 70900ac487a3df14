//! Command-line front end for `ddtraj`: trajectory CSV I/O, TOML configuration and the
//! subcommand implementations behind the `ddtraj` binary.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod example1;

pub use commands::{run, Cli, Outcome};
pub use error::CliError;
