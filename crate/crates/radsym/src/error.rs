//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad resolution, non-dividing step, bad parameter range).
    #[error("configuration error: {0}")]
    Config(String),

    /// Geometric degeneracy (coincident centroids, endpoint inside occluder, ...).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// An allocation that would exceed addressable/available memory.
    #[error("capacity error: cannot allocate {rows}x{cols} dense matrix")]
    Capacity { rows: usize, cols: usize },

    /// Mismatched dimensions between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterate left the feasible domain (non-positive flux under a fractional power).
    #[error("iterate out of domain: {0}")]
    IterateOutOfDomain(String),

    /// Invalid polynomial order pair.
    #[error("invalid order: {0}")]
    InvalidOrder(String),

    /// Least-squares system is rank deficient.
    #[error("rank deficiency: effective rank {rank} of {cols} columns; degenerate columns {degenerate:?}")]
    RankDeficient {
        rank: usize,
        cols: usize,
        degenerate: Vec<usize>,
    },

    /// Linear-algebra backend failure.
    #[error("linear algebra error: {0}")]
    Linalg(String),

    /// Iterative solver diverged.
    #[error("solver diverged: {0}")]
    Diverged(String),

    /// Iterative solver reached its iteration budget without meeting tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Singular matrix in a direct solve.
    #[error("singular system: {0}")]
    Singular(String),

    /// I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed on-disk data.
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
