//! Experiment driver behind the `manifold` binary.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{run, Stage};
