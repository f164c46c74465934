//! Experiment driver: configuration, dataset resolution, the
//! train/retrain/evaluate pipeline and the subcommand implementations
//! behind the `hdc` binary.

pub mod commands;
pub mod config;
pub mod datasets;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::{DatasetId, ExperimentConfig, ThetaSetting};
pub use error::{CliError, CliResult};
pub use pipeline::{PipelineOutcome, Stage};
