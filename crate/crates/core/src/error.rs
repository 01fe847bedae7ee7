use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid reference spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("design image violates invariants: {0}")]
    InvalidImage(String),

    #[error("singular FEM system: {0}")]
    SingularSystem(String),

    #[error("volume target unattainable: {0}")]
    InfeasibleVolume(String),

    #[error("tensor shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("missing design cache: {0}")]
    MissingCache(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("corrupt or unsupported file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
