//! Experiment runner for `evtobs-core`: TOML configs, CSV and JSON outputs,
//! ingestion of external multivariate series, and named presets that
//! compare runs against reference values.

pub mod analyze;
pub mod config;
mod error;
pub mod experiments;
pub mod ingest;
pub mod output;
pub mod presets;
pub mod synthetic;

pub use error::{Error, Result};
