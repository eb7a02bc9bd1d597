use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("numeric derivative failed: {0}")]
    NumericDerivative(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("density is not normalized (total = {total})")]
    NotNormalized { total: f64 },

    #[error("tangent frame lost rank at t = {t}")]
    Renormalization { t: f64 },

    #[error("operator is not unitary (deviation {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("too few points in window: {got} < {need}")]
    TooFewPoints { got: usize, need: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
