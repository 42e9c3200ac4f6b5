//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular to working tolerance (condition estimate {cond:.3e})")]
    SingularMatrix { cond: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("pencil (E, A) is not regular")]
    IrregularPencil,

    #[error("pencil index exceeds one (A22 singular, condition estimate {cond:.3e})")]
    IndexTooHigh { cond: f64 },

    #[error("initial state is inconsistent with the algebraic constraint (residual {residual:.3e})")]
    InconsistentInitialState { residual: f64 },

    #[error("input sequence too short: index-{index} system needs {needed} terms, got {got}")]
    InsufficientInput {
        index: usize,
        needed: usize,
        got: usize,
    },

    #[error("weight matrix rejected: {0}")]
    InvalidWeight(String),

    #[error("I + D is singular to working tolerance (smallest singular value {sigma_min:.3e}); the transform needs an input-space restriction")]
    SingularFeedthrough { sigma_min: f64 },

    #[error("evaluation point is at or near the spectrum (distance estimate {distance:.3e})")]
    PoleProximity { distance: f64 },

    #[error("alpha lies in the spectrum of A; pick a different discretization parameter")]
    ResolventViolation,

    #[error("operation requires index <= 1 but the pencil has index {index}")]
    Unsupported { index: usize },

    #[error("system file error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
