//! Configuration, subcommands and output handling for the `rvp` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{dispatch, Mode, Outcome};
pub use config::{parse_config, RunConfig};
pub use error::CliError;
