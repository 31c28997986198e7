use thiserror::Error;

/// Errors surfaced by the detection and fitting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("parse error at record {record}: {message}")]
    Parse { record: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
