use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation (bad dimension, point outside a space, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Data that cannot support the requested fit (constant response, rank deficiency).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Correlation matrix could not be factorized, even after jitter escalation.
    #[error("ill-conditioned correlation matrix: {0}")]
    IllConditioned(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
