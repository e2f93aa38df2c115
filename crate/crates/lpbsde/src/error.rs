use thiserror::Error;

/// Errors surfaced by the library.
///
/// Integrability failures are *not* errors: divergent integrals are reported
/// as `f64::INFINITY` so callers can assert divergence. Errors are reserved
/// for malformed inputs and for numerical procedures that did not finish.
#[derive(Error, Debug)]
pub enum Error {
    /// Structurally invalid measure (zero mark, non-positive weight, ...).
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Invalid argument outside a measure (domain violation, bad grid spec, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Mark function does not match the measure it is paired with.
    #[error("incompatible shapes: {0}")]
    Incompatible(String),

    /// Convex descent ran out of its iteration budget; carries the best bound found.
    #[error("descent did not converge within budget (best bound {best})")]
    NonConvergence { best: f64 },

    /// Root bracketing for the certificate failed.
    #[error("bisection failure: {0}")]
    BisectionFailure(String),

    /// Certificate was asked for a point in the wrong regime.
    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    /// Fixed-point iteration of the implicit solver step did not converge.
    #[error("implicit step did not converge at t={t} (residual {residual})")]
    FixedPointDiverged { t: f64, residual: f64 },

    /// Regression design matrix is rank deficient.
    #[error("regression rank deficient (condition number {condition})")]
    RankDeficient { condition: f64 },

    /// An operation that needs at least one sample got none.
    #[error("empty input: {0}")]
    Empty(String),
}
