use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("size {requested} exceeds limit {limit}")]
    TooLarge { requested: usize, limit: usize },
    #[error("segment {index} has non-positive duration")]
    ZeroDuration { index: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("no sign change of the bracketed function on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("empty variational parameter set")]
    EmptyParameterSet,
    #[error("integration step too coarse: rotation per step {angle} exceeds {limit}")]
    StepTooCoarse { angle: f64, limit: f64 },
    #[error("optimizer did not improve on the seed point")]
    NoImprovement,
}

pub type Result<T> = std::result::Result<T, Error>;
