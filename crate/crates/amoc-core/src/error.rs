//! Shared error type for the AMOC crates.

use thiserror::Error;

/// Errors produced by series construction, test statistics and the
/// simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Segment bounds do not satisfy `1 <= a <= b <= n`.
    #[error("segment [{start}, {end}] out of range for a series of length {n}")]
    IndexOutOfRange { start: usize, end: usize, n: usize },

    /// A studentized statistic would divide by a zero variance estimate.
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    /// Cropping left no admissible changepoint candidates.
    #[error("cropping delta = {delta} leaves no admissible k for n = {n}")]
    EmptyCropRange { delta: f64, n: usize },

    /// Input series violates a structural invariant.
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    /// Cropping fraction outside (0, 0.5).
    #[error("invalid cropping fraction {0}; must lie in (0, 0.5)")]
    InvalidDelta(f64),

    /// Joinpoint design matrix is singular at the given index.
    #[error("singular joinpoint design at k = {0}")]
    SingularDesign(usize),

    /// A limit-process evaluation hit an ill-conditioned linear system.
    #[error("numerical singularity: {0}")]
    NumericalSingularity(String),

    /// Input outside the mathematical domain of a formula.
    #[error("domain error: {0}")]
    DomainError(String),

    /// No quantile table row exists for the requested family/delta.
    #[error("unknown quantile family: {0}")]
    UnknownFamily(String),

    /// Simulation configuration violates its invariants.
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    /// A Monte Carlo validation check failed at the given grid pair.
    #[error("validation failure at (t, s) = ({t}, {s}): {message}")]
    ValidationFailure { t: f64, s: f64, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
