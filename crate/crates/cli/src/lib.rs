//! Experiment runner behind the `cirauth` binary.

pub mod config;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Scenario};
pub use run::{CliError, Result};
