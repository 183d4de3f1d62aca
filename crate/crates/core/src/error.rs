use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("precision failure: {0}")]
    Precision(String),
    #[error("malformed Stokes bundle: {0}")]
    MalformedBundle(String),
    #[error("path error: {0}")]
    Path(String),
    #[error("chamber violation: {0}")]
    Chamber(String),
    #[error("resonant residue: {0}")]
    Resonance(String),
    #[error("unsupported scale: {0}")]
    UnsupportedScale(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
