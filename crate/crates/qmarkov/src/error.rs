//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the numerical substrate and the channel analyses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigensolver failed to converge")]
    EigenConvergence,

    #[error("input is not positive semidefinite: smallest eigenvalue {min_eig:.3e}")]
    NotPositive { min_eig: f64 },

    #[error("empty Kraus list")]
    EmptyKraus,

    #[error("Kraus normalization residual {residual:.3e} exceeds eq_tol {eq_tol:.1e}")]
    NotTracePreserving { residual: f64, eq_tol: f64 },

    #[error("subspace is not an enclosure: certificate slack {slack:.3e}")]
    NotEnclosure { slack: f64 },

    #[error("negative time {0} not allowed")]
    NegativeTime(f64),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
