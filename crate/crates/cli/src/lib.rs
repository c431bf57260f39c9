//! Scenario runner: parses a TOML scenario, runs the solver and every
//! diagnostic, and writes CSV/JSON artifacts with a verdict table.

pub mod artifacts;
pub mod pipeline;
pub mod scenario;
pub mod sweep;

pub use pipeline::{run, RunBundle, Status, Summary, Verdict};
pub use scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cohesive_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Hypotheses(String),
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Directory holding the scenarios shipped with the crate.
pub fn shipped_scenarios_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}
