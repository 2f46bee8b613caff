use std::path::{Path, PathBuf};

use sparsecert_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 2 invalid config, 3 solver failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io { .. } | CliError::Parse { .. } => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidModelParams(_)
            | CoreError::InvalidConfig(_)
            | CoreError::InvalidSupport(_)
            | CoreError::InvalidSeparation { .. }
            | CoreError::OutOfField { .. } => CliError::Config(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}
