use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {function}: {detail}")]
    Domain { function: &'static str, detail: String },

    #[error("invalid parameters: {constraint}")]
    InvalidParams { constraint: &'static str },

    #[error("invalid singularity spec: {0}")]
    InvalidSingularity(String),

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },

    #[error("{what} did not converge (estimate {value:e}, error {abs_error_est:e})")]
    Convergence {
        what: String,
        value: f64,
        abs_error_est: f64,
    },

    #[error("divergent norm: {condition}")]
    Divergent { condition: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integration aborted by the integrand")]
    Aborted,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        function,
        detail: detail.into(),
    }
}
