//! Batch front end for the oscillating-boundary laboratory: configuration
//! parsing, study dispatch and artifact writing.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, Configuration};
pub use run::{run, Outcome, RunSummary, Study};
