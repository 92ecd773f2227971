//! Experiment runner behind the `chainroll` command line tool.

pub mod config;
pub mod experiment;

pub use config::{ChainSource, ConfigError, ExperimentConfig};
pub use experiment::{evaluate, run_experiment, ExperimentError, ExperimentOutput, PolicyStats};
