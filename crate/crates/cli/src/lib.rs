//! Configuration-driven experiment runner for `heatlab`.
//!
//! A TOML suite lists experiments by kind; each kind is a registered
//! [`experiments::Experiment`]. Runs write CSV/JSON artifacts into one
//! subdirectory per experiment plus a checksummed `manifest.json`.

pub mod artifacts;
pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod golden;
pub mod plot;
pub mod runner;

pub use config::{ExperimentConfig, SuiteConfig, REFERENCE_CONFIG};
pub use error::{CliError, CliResult};
pub use experiments::{Experiment, ExperimentRegistry};
pub use runner::{run_suite, validate_suite, Manifest, SuiteRun};
