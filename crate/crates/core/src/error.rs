use thiserror::Error;

pub type Result<T> = std::result::Result<T, GapError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GapError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("second derivative undefined at breakpoint t = {0}")]
    AtBreakpoint(f64),

    #[error("profile provides derivatives up to order {available}, {needed} requested")]
    Smoothness { needed: usize, available: usize },

    #[error("system is under-specified: {0}")]
    UnderSpecified(String),

    #[error("quadrature did not converge after {panels} panels (estimate {estimate:e}, error {error:e})")]
    Accuracy {
        estimate: f64,
        error: f64,
        panels: usize,
    },

    #[error("degenerate test function: {0}")]
    Degenerate(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("integrand not integrable at the origin: {0}")]
    Integrability(String),

    #[error("no sign change found for order {order} (supported orders are 0..=50)")]
    BracketFailure { order: f64 },

    #[error("eigensolver failed: {message}")]
    Solver { message: String, log: Vec<String> },

    #[error("mode mismatch: {0}")]
    Mode(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> GapError {
    GapError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
