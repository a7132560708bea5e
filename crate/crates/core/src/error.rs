use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("out of supported family: {0}")]
    UnsupportedFamily(String),

    #[error("point {z} lies outside the support {support}")]
    Domain { z: f64, support: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree {requested} exceeds the precomputed recurrence cap {cap}")]
    DegreeCap { requested: usize, cap: usize },

    #[error("unsupported exponent alpha = {alpha}: {reason}")]
    UnsupportedExponent { alpha: f64, reason: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("ill-conditioned transform (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("quadrature failed to converge: {0}")]
    NonConvergence(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedFamily(_) => "unsupported_family",
            Error::Domain { .. } => "domain",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DegreeCap { .. } => "degree_cap",
            Error::UnsupportedExponent { .. } => "unsupported_exponent",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Overflow(_) => "overflow",
            Error::NonFinite(_) => "non_finite",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::NonConvergence(_) => "non_convergence",
            Error::LinearAlgebra(_) => "linear_algebra",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
