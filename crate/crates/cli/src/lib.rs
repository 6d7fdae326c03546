//! Staged command-line pipeline around `stc-core`.
//!
//! Every stage writes plain-text or binary artifacts into one output
//! directory and records their content hashes in `manifest.json`, so a stage
//! whose parameters and inputs are unchanged is skipped on rerun.

pub mod config;
pub mod error;
pub mod manifest;
pub mod stages;

pub use config::{BaselineFeatures, Dataset, PipelineConfig};
pub use error::{CliError, Result};
pub use manifest::Manifest;
pub use stages::{run, Stage, StageReport};
