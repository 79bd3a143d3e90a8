//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: dimension mismatch (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix entry ({row},{col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("trace differs from 1 by {deviation:.3e} (tolerance {tolerance:.1e})")]
    TraceNotOne { deviation: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue ~ {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("operator is not unitary: max |U^H U - I| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("invalid subsystem selection: {reason}")]
    InvalidSubsystems { reason: String },

    #[error("total dimension {dim} exceeds supported maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("matrix is numerically zero (max |entry| = {max_abs:.3e})")]
    ZeroMatrix { max_abs: f64 },

    #[error(
        "product-vector search failed after {restarts} restarts \
         (best |value| = {best:.3e}, threshold {threshold:.3e})"
    )]
    SearchFailed {
        restarts: usize,
        best: f64,
        threshold: f64,
    },

    #[error("no index pair admitted a product-vector witness")]
    DistillationFailed,

    #[error("{stage}: {quantity} = {value:.6e} violates tolerance {tolerance:.1e}")]
    ToleranceViolation {
        stage: &'static str,
        quantity: &'static str,
        value: f64,
        tolerance: f64,
    },

    #[error("off-diagonal coefficient at pair ({k},{l}) is zero; no Bell settings exist")]
    AlphaZero { k: usize, l: usize },

    #[error("scenario shape mismatch: {reason}")]
    ScenarioShape { reason: String },

    #[error("scenario too large: {strategies} deterministic strategies exceed limit {limit}")]
    ScenarioTooLarge { strategies: u128, limit: u128 },

    #[error("feasibility solver failed: {reason}")]
    SolverFailure { reason: String },

    #[error("cannot project {requested} of {parties} parties")]
    ProjectionDepth { requested: usize, parties: usize },

    #[error("document parse error: {0}")]
    Parse(String),
}
