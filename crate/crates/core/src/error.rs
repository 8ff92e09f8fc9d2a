use thiserror::Error;

/// Errors raised by the engines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance (n = {n}, s = {s}): {reason}")]
    InvalidInstance {
        n: u64,
        s: u64,
        reason: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("n = {n} exceeds the exact-arithmetic ceiling of {ceiling}")]
    ExactCeiling { n: u64, ceiling: u64 },

    #[error("n = {n} is too small for this regime: rounded s = {rounded} is outside [1, n-1] by more than one")]
    RegimeTooSmall { n: u64, rounded: i64 },

    #[error("horizon of {needed} steps exceeds max_terms = {max_terms}")]
    HorizonExceeded { needed: u64, max_terms: u64 },

    #[error("series did not reach tolerance {tol:e} within {max_terms} terms")]
    SeriesNotConverged { tol: f64, max_terms: u64 },
}

impl Error {
    /// True for failures of a numerical budget (horizon, series length)
    /// rather than of the inputs themselves.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::HorizonExceeded { .. } | Error::SeriesNotConverged { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
