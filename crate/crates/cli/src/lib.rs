//! Configuration, presets and scenario execution behind the `etpump` binary.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("unknown preset `{0}` (see `etpump list`)")]
    UnknownPreset(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Sim(#[from] etpump::Error),
}

pub use config::{load_config, parse_config, ScenarioConfig, ScenarioKind};
pub use output::OutputFile;
pub use run::{run_scenario, Overrides, RunReport};
