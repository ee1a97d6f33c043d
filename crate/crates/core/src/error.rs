use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    /// An argument is outside the domain of the formula being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant of a domain type does not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An iterative routine stopped before meeting its tolerance.
    #[error("numeric failure in {routine} after {iterations} iterations")]
    NumericFailure { routine: &'static str, iterations: usize },

    /// The Poisson series did not show geometric decay.
    #[error("no empirical spectral gap: term ratio {ratio:.6} over the trailing window after {terms} terms")]
    NoSpectralGap { ratio: f64, terms: usize },

    /// A requested value lies outside the representable or tabulated range.
    #[error("range error: {0}")]
    Range(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn domain(msg: impl Into<String>) -> LabError {
    LabError::Domain(msg.into())
}

pub(crate) fn invariant(msg: impl Into<String>) -> LabError {
    LabError::Invariant(msg.into())
}
