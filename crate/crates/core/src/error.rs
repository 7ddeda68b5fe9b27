use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a formula (singular path loss,
    /// zero matrix square root, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A model precondition such as relay separation does not hold.
    #[error("constraint violated: {0}")]
    Constraint(String),
    /// A factorization or eigen-solve failed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("index out of range: {0}")]
    Index(String),
    /// The caller asked for something the operation cannot provide.
    #[error("usage error: {0}")]
    Usage(String),
    /// Configuration failed validation; the message names the offending field.
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
