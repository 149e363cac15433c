use thiserror::Error;

/// Errors raised by state construction, channel application and the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("total dimension {0} exceeds the 2^20 limit")]
    DimensionOverflow(usize),

    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),

    #[error("matrix is not unitary (max |U^dag U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semi-definite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("Kraus elements violate completeness (max |sum E^dag E - I| = {0:e})")]
    IncompleteChannel(f64),

    #[error("invalid projector set: {0}")]
    InvalidProjectors(String),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("analytic derivative disagrees with finite difference by {deviation:e} at phi = {phi}")]
    DerivativeMismatch { phi: f64, deviation: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("convention failed validation: {0}")]
    Convention(String),

    #[error("no optimized parameter table for p = {0}")]
    MissingThetaTable(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
