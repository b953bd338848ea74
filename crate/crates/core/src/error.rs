use thiserror::Error;

use crate::spin::Spin;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin value {0}: 2j must be a nonnegative integer")]
    InvalidSpin(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("spin sector j = {} is not present", .0.value())]
    SectorMissing(Spin),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero state has no Majorana constellation")]
    ZeroState,

    #[error("record is under-determined: measurement rank {rank} < required {required}")]
    Underdetermined { rank: usize, required: usize },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } => 3,
            _ => 2,
        }
    }
}
