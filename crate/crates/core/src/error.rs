use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("AR2 aborted at iteration {iteration}: {reason}")]
    Aborted { iteration: usize, reason: String },

    #[error("schedule violates admissibility: {0}")]
    Schedule(String),

    #[error("construction invariant violated: {0}")]
    Construction(String),

    #[error("interpolation error: {0}")]
    Interpolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
