//! Experiment runner for the polex simulator: named experiments, parameter
//! sweeps and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod sweep;
pub mod tolerances;

pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;
pub use experiments::run;
pub use manifest::RunManifest;
pub use sweep::sweep;
