use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("jump law has an infinite exponential moment: {0}")]
    InfiniteMoment(String),

    #[error("jump quadrature window misses mass {truncated:.3e} (limit 1e-6)")]
    Coverage { truncated: f64 },

    #[error("jump fixed-point iteration did not converge at step {step} after {iterations} iterations (last change {change:.3e})")]
    InnerNonConvergence { step: usize, iterations: usize, change: f64 },

    #[error("obstacle solver ({scheme}) did not converge at step {step} after {iterations} iterations")]
    ObstacleNonConvergence { scheme: &'static str, step: usize, iterations: usize },

    #[error("tridiagonal system is singular at row {row}")]
    SingularSystem { row: usize },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("boundary extraction failed: {0}")]
    Extraction(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("b'(t) identity denominator vanishes at level {level} (value {value:.3e})")]
    SingularIdentity { level: usize, value: f64 },

    #[error("Volterra kernel quadrature diverged at level {level}")]
    KernelDivergence { level: usize },

    #[error("approximating sequence lost monotonicity at iterate {iterate}: violation {violation:.3e}")]
    NonMonotone { iterate: usize, violation: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
