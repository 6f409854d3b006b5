#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("stride mismatch: {0}")]
    Stride(String),
    #[error("batch normalization needs at least 2 sites in training mode, got {0}")]
    TooFewSites(usize),
    #[error("no labelled sites in batch")]
    NoLabels,
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] voxtrav_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
