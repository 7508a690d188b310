//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied an argument outside the documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration violates a geometric constraint (e.g. overlapping modules).
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// The array geometry does not admit the requested computation
    /// (collinear elements, singular information matrix, ...).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A numerical procedure failed to converge; the message carries a residual estimate.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The search instance cannot be satisfied (e.g. grid too small for the module count).
    #[error("infeasible instance: {0}")]
    InfeasibleInstance(String),

    /// Rejection sampling exhausted its attempt budget.
    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
