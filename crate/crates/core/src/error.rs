use thiserror::Error;

use crate::conic::SolveStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("map is not trace preserving (deviation {deviation:.3e})")]
    NonTracePreserving { deviation: f64 },

    #[error("map is not completely positive (min Choi eigenvalue {min_eigenvalue:.3e})")]
    NonCompletelyPositive { min_eigenvalue: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("not a probability distribution: {0}")]
    NotADistribution(String),

    #[error("not a unitary matrix (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("support condition violated: {0}")]
    SupportViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported free-set kind: {0}")]
    UnsupportedKind(String),

    #[error("free-set kind parameters inconsistent with dimensions: {0}")]
    UnsupportedKindDimensions(String),

    #[error("channel has no classical-quantum representation")]
    NotCqChannel,

    #[error("solver failed with status {status:?}: {context}")]
    SolverFailure { status: SolveStatus, context: String },

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("computation exceeds budget: {0}")]
    BudgetExceeded(String),

    #[error("unsupported monotone: {0}")]
    UnsupportedMonotone(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
