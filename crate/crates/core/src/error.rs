use thiserror::Error;

/// Errors raised by the numerical kernels and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("observable is infinite at x = {x}")]
    Singular { x: f64 },
    #[error("window precision insufficient: radius {radius:e} below 2^-{bits_available}")]
    Precision { radius: f64, bits_available: u32 },
    #[error("cost limit exceeded: {0}")]
    Cost(String),
    #[error("memory budget exceeded ({needed} cells > {budget}); smallest feasible grid spacing is {min_delta:e}")]
    Budget {
        needed: u64,
        budget: u64,
        min_delta: f64,
    },
    #[error("observable is not integrable: {0}")]
    NotIntegrable(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("certificate failed at n = {n}: {detail}")]
    Certificate { n: u64, detail: String },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

pub type Result<T, E = LdError> = std::result::Result<T, E>;
