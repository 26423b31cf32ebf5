use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown kernel family `{0}`")]
    UnknownFamily(String),
    #[error("infrared exponent {0} outside (-1, 1)")]
    AlphaOutOfRange(f64),
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("quadrature did not converge: value {value}, residual {residual}")]
    Quadrature { value: f64, residual: f64 },
    #[error("grid size {0} is not a power of two >= 4")]
    GridSize(usize),
    #[error("time step {dt} violates the stability guard dt <= spacing^2/4 = {limit}")]
    StabilityGuard { dt: f64, limit: f64 },
    #[error("replica {replica}: position {x} left the safe domain |X| <= {limit} at t = {t}")]
    DomainExceeded { replica: u64, x: f64, limit: f64, t: f64 },
    #[error("records disagree on the output-time grid")]
    GridMismatch,
    #[error("value {value} at index {index} must be positive")]
    NonPositiveValue { index: usize, value: f64 },
    #[error("lambda {lambda} below the truncation guard {min}")]
    LambdaTooSmall { lambda: f64, min: f64 },
    #[error("assembled {size}x{size} matrix is not positive definite (smallest diagonal {min_diagonal})")]
    NotPositiveDefinite { size: usize, min_diagonal: f64 },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
