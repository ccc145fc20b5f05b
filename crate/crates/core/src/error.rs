use thiserror::Error;

use tensor_train::TtError;

#[derive(Debug, Error)]
pub enum InferError {
    #[error(transparent)]
    Tt(#[from] TtError),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Every marginal entry of some mode vanished after exponentiation.
    /// `max_rank` is the largest bond rank of the exponentiated tensor
    /// train, when one was built.
    #[error("inference failed: marginal of mode {mode} is identically zero")]
    InferenceFailure { mode: usize, max_rank: Option<usize> },

    #[error("enumeration of {requested} assignments exceeds the limit of {limit}")]
    Capacity { requested: u128, limit: u128 },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("invalid code: {0}")]
    Code(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, InferError>;
