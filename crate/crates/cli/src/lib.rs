//! Library surface of the `cocycle` command line tool, split out so the
//! integration tests can drive commands in-process as well as through the
//! binary.

pub mod commands;
pub mod config;

pub use commands::{run, Cli, CommandKind};
pub use config::{parse_config, parse_point, ExperimentConfig, ParseError};
