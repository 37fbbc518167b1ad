use std::path::Path;

use cohesive_core::EvolutionError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", key.as_ref().map(|k| format!(" at `{k}`")).unwrap_or_default())]
    Config {
        key: Option<String>,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(
        "initial state is not globally stable: a competitor lowers the energy by {improvement:e}"
    )]
    InitialNotStable { improvement: f64 },
    #[error("audit failed: {0}")]
    Audit(String),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            key: Some(key.to_owned()),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config { .. } => 2,
            CliError::Solver(_) => 3,
            CliError::InitialNotStable { .. } => 4,
            CliError::Audit(_) => 5,
        }
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::InitialNotStable { improvement, .. } => {
                CliError::InitialNotStable { improvement }
            }
            EvolutionError::InitialInconsistent { .. }
            | EvolutionError::Dimension { .. }
            | EvolutionError::NoSteps
            | EvolutionError::Load(_)
            | EvolutionError::Law(_) => CliError::Config {
                key: None,
                message: e.to_string(),
            },
            other => CliError::Solver(other.to_string()),
        }
    }
}
