use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input is not symmetric: max asymmetry {max_asymmetry:e} exceeds tolerance {tolerance:e}")]
    AsymmetricInput { max_asymmetry: f64, tolerance: f64 },

    #[error("input contains NaN or infinite entries")]
    NonFinite,

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix must have at least one row and column")]
    Empty,

    #[error("symmetric eigensolver did not converge")]
    EigFailure,

    #[error("matrix is not positive definite (lambda_min = {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("matrix is not positive semidefinite (lambda_min = {lambda_min:e})")]
    NotPsd { lambda_min: f64 },

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("every column pair has a zero norm product")]
    AllZeroColumns,

    #[error("sampling plan does not match the supplied matrices")]
    PlanMismatch,

    #[error("exact enumeration needs {sequences} sequences (limit {limit})")]
    TooLarge { sequences: u128, limit: u128 },

    #[error("moment generating function diverges at eta = {eta}")]
    Divergent { eta: f64 },

    #[error("ensemble lacks the statistics this certificate needs: {0}")]
    UnknownMoments(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error came from reading or writing rather than from the inputs' values.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
