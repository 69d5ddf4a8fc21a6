use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("player index {index} out of range for {n} players")]
    Index { index: usize, n: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite score {value} for coalition {coalition}")]
    Numeric { value: f64, coalition: String },

    #[error("exact enumeration refused: {n} players exceeds the limit of {limit}")]
    SizeLimit { n: usize, limit: usize },

    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),

    #[error("degenerate instability: {0}")]
    DegenerateInstability(String),

    #[error("partition error: {0}")]
    Partition(String),

    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("training loss {loss} still above {threshold} after {epochs} epochs")]
    BudgetExceeded {
        loss: f64,
        threshold: f64,
        epochs: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
