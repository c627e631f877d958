//! Experiment driver for `qlat-core`: configuration files, CSV output, the
//! height ledger and the acceptance battery.

pub mod config;
pub mod criteria;
pub mod error;
pub mod ledger;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, ExitCode};
