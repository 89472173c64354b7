use rvp_core::{IneqError, SimError};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output directory {} does not exist", .0.display())]
    MissingOutputDir(PathBuf),
    #[error("invalid {name}: {message}")]
    Env { name: &'static str, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ineq(#[from] IneqError),
    #[error("json encoding failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for violated invariants, 2 for input and I/O problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Sim(SimError::BarrierViolated { .. }) => 1,
            CliError::Ineq(IneqError::GateFailed { .. }) => 1,
            _ => 2,
        }
    }
}
