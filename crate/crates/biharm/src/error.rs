use thiserror::Error;

/// Errors produced by the simulation and reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("linear solve failed for block {block}: {reason}")]
    LinearSolve { block: String, reason: String },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
