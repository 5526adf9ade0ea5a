use thiserror::Error;

/// Errors raised by the expansion machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {what} ({requested} > {limit})")]
    Capacity {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("non-finite integrand value at sample {sample}")]
    NonFiniteSample { sample: u64 },

    #[error("weight tuning failed after {iterations} iterations (max a = {max_a})")]
    TuningFailed { iterations: usize, max_a: f64 },

    #[error("unsupported dimension {0}: the series over cycle lengths diverges for d <= 2")]
    UnsupportedDimension(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed input: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
