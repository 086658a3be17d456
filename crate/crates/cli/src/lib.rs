//! File formats, experiment orchestration and the `moderator` command line
//! on top of `moderator-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod gamefile;
pub mod json;
pub mod transcript;

pub use config::{ExperimentConfig, Mode, Overrides};
pub use error::{CliError, CliResult};
