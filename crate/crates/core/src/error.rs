use thiserror::Error;

/// Errors raised by the histogram, map and clustering routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid bin count: {0}")]
    InvalidBinCount(usize),

    #[error("invalid bin {index}: {reason}")]
    InvalidBin { index: usize, reason: String },

    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty barycenter")]
    EmptyBarycenter,

    #[error("invalid weight at position {0}")]
    InvalidWeight(usize),

    #[error("neuron index {index} out of range for a map of {size} neurons")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("time step {t} outside 0..={t_max}")]
    TimeOutOfRange { t: usize, t_max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),

    #[error("label length mismatch: predicted={predicted}, truth={truth}")]
    LabelLengthMismatch { predicted: usize, truth: usize },

    #[error("at least {required} labels are required, got {found}")]
    TooFewLabels { required: usize, found: usize },

    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
