use crate::lowrank::LowRankFactor;
use crate::solver::SolveResult;
use thiserror::Error;

/// Crate-wide error type.
///
/// Variants that abort an iterative routine carry the best iterate produced so
/// far, so callers can inspect how close the method got before giving up.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Mode generation could not satisfy the separation constraint.
    #[error(
        "mode generation failed: no frequency set with pairwise wrap-around \
         separation >= {min_separation} found after {attempts} draws"
    )]
    Generation { min_separation: f64, attempts: usize },

    /// The signal's Vandermonde factors are numerically rank deficient, so
    /// incoherence (and recoverability) is undefined.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// A dense materialization was refused because the matrix is too large.
    #[error("dense materialization refused: {rows}x{cols} exceeds {limit} cells")]
    DenseGuard {
        rows: usize,
        cols: usize,
        limit: usize,
    },

    /// The iterative partial SVD did not reach the requested tolerance.
    #[error(
        "partial SVD stalled: residual {residual:.3e} after {iters} iterations \
         (tolerance {tol:.3e}); best iterate attached"
    )]
    PartialSvd {
        tol: f64,
        iters: usize,
        residual: f64,
        best: Box<LowRankFactor>,
    },

    /// The completion iteration blew up instead of converging.
    #[error(
        "iteration diverged: relative residual {residual:.3e} exceeded {limit:.1e} \
         at iteration {iteration}; last finite iterate attached"
    )]
    Divergence {
        residual: f64,
        limit: f64,
        iteration: usize,
        partial: Box<SolveResult>,
    },

    /// The relative residual is undefined because the observed vector is zero.
    #[error("relative residual undefined: observed vector has zero norm")]
    UndefinedResidual,

    /// The requested problem exceeds the configured memory budget.
    #[error("problem too large: {0}")]
    Budget(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A data file parsed but failed validation.
    #[error("file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand used by argument validation throughout the crate.
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
