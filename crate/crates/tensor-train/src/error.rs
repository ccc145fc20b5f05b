use thiserror::Error;

#[derive(Debug, Error)]
pub enum TtError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index:?} out of range for dimensions {dims:?}")]
    IndexOutOfRange { index: Vec<usize>, dims: Vec<usize> },

    #[error("dense tensor with {requested} elements exceeds the budget of {budget}")]
    Capacity { requested: u128, budget: usize },

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("non-finite function value {value} at multi-index {index:?}")]
    NonFinite { index: Vec<usize>, value: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, TtError>;
