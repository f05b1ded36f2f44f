use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("basis index {index} out of range for truncation {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("truncation mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An elementary coefficient exceeded the bound its integrand declares.
    #[error("coefficient {value} at block {block} exceeds bound {bound}")]
    BoundViolation {
        block: usize,
        value: f64,
        bound: f64,
    },

    /// The partition does not contain a jump time of the driver.
    #[error("partition is missing driver jump time {time}")]
    MissingJumpTime { time: f64 },

    /// Localizing levels stop before the horizon on this path.
    #[error("localizing levels stop at {reached}, short of horizon {horizon}")]
    LevelsNotExhausted { reached: f64, horizon: f64 },

    #[error("ensemble horizon {horizon} is shorter than n_max = {n_max}")]
    HorizonTooShort { horizon: f64, n_max: usize },

    #[error("integrand dictionary is empty")]
    EmptyDictionary,

    #[error("replica count mismatch: {left} vs {right}")]
    ReplicaMismatch { left: usize, right: usize },

    /// Pasted localized integrals disagree where their intervals overlap.
    #[error("localized integrals disagree at t = {time}")]
    OverlapMismatch { time: f64 },

    #[error("ensembles do not share an observation grid")]
    GridMismatch,
}
