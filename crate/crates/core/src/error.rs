use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A quantity that must lie in [0, 1] was outside it. Usually a caller
    /// forgot to clamp a stimulation or passed a corrupted activation.
    #[error("{what} = {value} is outside [0, 1]")]
    OutOfUnitRange { what: &'static str, value: f64 },

    #[error("non-finite {what} at t = {t:.4} s")]
    NonFinite { what: &'static str, t: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("goal ({x:.4}, {y:.4}) m is not reachable by the arm")]
    UnreachableGoal { x: f64, y: f64 },

    #[error("every candidate scored -inf in iteration {iteration}; {diagnostics}")]
    AllCandidatesFailed { iteration: usize, diagnostics: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("agent artifact: {0}")]
    Artifact(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
