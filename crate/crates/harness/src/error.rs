use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    /// Some grid cells or report entries could not be produced.
    #[error("partial failure: {0}")]
    Partial(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Artifact(String),
    #[error(transparent)]
    Core(#[from] reachlab::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration errors, 3 for partial
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Core(reachlab::Error::InvalidConfig(_)) => 2,
            HarnessError::Partial(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}
