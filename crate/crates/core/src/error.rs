use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("wave functions live on different grids")]
    GridMismatch,
    #[error("wave function norm {0:e} is below the underflow threshold")]
    ZeroNorm(f64),
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),
    #[error("point lies too close to a node of the wave function (relative density {0:e})")]
    NearNode(f64),
    #[error("rejection sampling acceptance rate {0:e} is below the envelope limit")]
    EnvelopeFailure(f64),
    #[error("conditional slice has norm {0:e}; the wave function vanishes at this pointer position")]
    NullSlice(f64),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("invalid measurement setup: {0}")]
    InvalidSetup(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
