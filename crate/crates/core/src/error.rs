use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("required column `{field}` (header `{header}`) not found in input")]
    MissingColumn { field: String, header: String },

    #[error("bus table is empty")]
    EmptyBusTable,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("{undefined} of {total} bootstrap resamples were undefined (budget {budget:.1}%)")]
    TooManyUndefined {
        undefined: usize,
        total: usize,
        budget: f64,
    },

    #[error("geodetic inversion did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
