use thiserror::Error;

/// Errors raised by the game model, strategies and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("stops remaining {l} outside 1..={max}")]
    StopsOutOfRange { l: usize, max: usize },

    #[error("threshold index {index} out of range for vector of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("observation {o} outside alphabet of size {n}")]
    ObservationOutOfRange { o: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("observation has zero predictive probability under the filter model")]
    FilterDegenerate,

    #[error("empty strategy buffer")]
    EmptyBuffer,

    #[error("strategy role mismatch: expected {expected}, got {got}")]
    RoleMismatch { expected: &'static str, got: &'static str },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
