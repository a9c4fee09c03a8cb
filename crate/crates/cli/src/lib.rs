//! Experiment runner for the magflow library: a TOML config in, CSV and
//! JSON artifacts plus a manifest out.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use run::{run, Command, RunError};
