use thiserror::Error;

/// Errors raised by sampling, model evaluation and the estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {requested} exceeds the direction-number table ({max} dimensions)")]
    UnsupportedDimension { requested: usize, max: usize },

    #[error("correlation not positive definite")]
    NotPositiveDefinite,

    #[error("brute force under correlation supports Gaussian inputs only")]
    NonGaussianConditioning,

    #[error(
        "total-order estimation under dependence is out of scope; see analytic module for Test 5"
    )]
    CorrelatedTotalOrder,

    #[error("sample too small for alpha = {alpha}: {size} points per conditional sample give {expected:.3} < 1 expected tail points")]
    SampleSize {
        alpha: f64,
        size: usize,
        expected: f64,
    },

    #[error("output variance is zero")]
    ZeroVariance,

    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("unknown model '{name}'; available: {available}")]
    UnknownModel { name: String, available: String },
}

impl Error {
    /// True for errors caused by malformed inputs rather than by the
    /// numerics of an estimation run.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::UnsupportedDimension { .. }
                | Error::NotPositiveDefinite
                | Error::UnknownModel { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
