//! Experiment orchestration for the `ntkcorr` binary: configuration files,
//! deterministic parallel sweeps, CSV/JSON emission and SVG plots.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod error;
pub mod output;
pub mod svg;
pub mod sweep;

pub use config::{Command, ExperimentConfig};
pub use error::{CliError, CliResult};
