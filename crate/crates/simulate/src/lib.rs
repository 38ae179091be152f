//! Experiment driver built on the `lindblad-npi` library: convergence tables,
//! the qudit-cavity benchmark, Jaynes-Cummings revival/suppression runs, and
//! stability-region exports, all emitting CSV plus a JSON run manifest.

pub mod cavity;
pub mod config;
pub mod convergence;
pub mod error;
pub mod jc;
pub mod output;
pub mod stability;

pub use config::{ExperimentConfig, Family};
pub use error::{CliError, Result};
