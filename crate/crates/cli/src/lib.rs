//! Library side of the `tfio` binary: configuration, operations and output.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use run::{run, Job, Op, Outcome};
