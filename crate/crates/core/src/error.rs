use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("regressor matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("matrix is not positive definite: leading minor {minor} is not positive")]
    NotPositiveDefinite { minor: usize },

    #[error("non-stationary transition (spectral radius {radius:.6})")]
    NonStationary { radius: f64 },

    #[error("Riccati iteration did not converge after {iterations} iterations (last relative change {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("weak normalization: impact estimate {impact:.3e} is too close to zero")]
    WeakNormalization { impact: f64 },

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parameter file: field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("category exhausted while drawing variables: {0}")]
    CategoryExhausted(String),

    #[error("corrupt file {path} at line {line}, column {column}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
