use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("joint domain has {size} outcomes, above the cap of {cap}; use efficient mode")]
    DomainCap { size: f64, cap: usize },
    #[error("no data for state {state}, action {action} at step {step}")]
    MissingData { state: usize, action: usize, step: usize },
    #[error("every heavy-hitter set was empty; nothing to select from")]
    EmptyPool,
    #[error("oracle contract violated: {0}")]
    Oracle(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
