//! Experiment harness: dataset simulation, estimator fits, summary tables
//! and timing, behind the `ccl` command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod tables;

pub use config::{EstimatorSpec, ExperimentConfig};
pub use error::{HarnessError, Result};
