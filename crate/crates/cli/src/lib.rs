//! Simulation, recovery and certification runs driven by JSON configs.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod simulate;
pub mod suite;

pub use config::{ExperimentConfig, ModelConfig, NoiseConfig, SignalConfig};
pub use error::CliError;
pub use report::RunReport;
