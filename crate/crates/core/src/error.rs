use thiserror::Error;

/// Errors raised by the algebra, module and extension routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree overflow: result has degree {degree}, cap is {max}")]
    DegreeOverflow { degree: usize, max: usize },

    #[error("backend mismatch: {0}")]
    BackendMismatch(String),

    #[error("element is not invertible (residual {residual:.3e})")]
    NotInvertible { residual: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("idempotent outside the similarity neighborhood{}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    NotInNeighborhood { step: Option<usize> },

    #[error("element is not invertible in the corner algebra")]
    NotInvertibleInCorner,

    #[error("not an isomorphism pair (residual {residual:.3e})")]
    NotAnIsoPair { residual: f64 },

    #[error("bad dimension: {0}")]
    BadDimension(String),

    #[error("derivation is not in the span of the declared basis")]
    UnknownDerivation,

    #[error("unsupported on this backend: {0}")]
    Unsupported(String),

    #[error("constraint violated: {what} (residual {residual:.3e})")]
    Constraint { what: String, residual: f64 },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
