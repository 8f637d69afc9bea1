use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A point was evaluated outside the set where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation needs an evaluator or attachment the instance does not carry.
    #[error("missing capability: {0}")]
    Capability(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("time step {dt:e} violates the explicit stability bound; need dt <= {required:e}")]
    Cfl { dt: f64, required: f64 },

    #[error("non-finite value at step {step}: {what}")]
    Numeric { step: usize, what: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
