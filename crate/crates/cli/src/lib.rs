//! Reproducible experiment runs over the `prtail` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod run;

pub use config::{validate, ExperimentConfig, ExperimentKind, ValidationReport};
pub use error::CliError;
pub use run::{run, Manifest};
