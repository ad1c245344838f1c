//! Configuration, dispatch and reproducible output for the `nsfde` tool.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_raw, validate, ConfigError, ExperimentConfig, ParseError, RawConfig, ValidationError};
pub use error::{CliError, CliResult};
pub use output::RunManifest;
pub use run::{execute, run_experiment, RunOutput};
