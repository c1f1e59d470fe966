//! Experiment driver for the `famiss` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod images;
pub mod table;

pub use config::{ConfigFile, ExperimentConfig, LatentChoice, Seeds};
pub use error::{CliError, CliResult};
