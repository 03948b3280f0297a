use thiserror::Error;

use crate::geometry::Channel;

/// Errors produced by the measurement pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("keypoint {0} is absent")]
    MissingKeypoint(Channel),
    #[error("segment {0} has zero length")]
    DegenerateSegment(&'static str),
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("channel {0} has no positive activation")]
    EmptyChannel(Channel),
    #[error("series contains no measured frames")]
    AllGaps,
    #[error("no complete cardiac cycle detected")]
    NoBeatsDetected,
    #[error("no beats to summarize")]
    EmptyBeats,
    #[error("at least {needed} beats required, got {got}")]
    InsufficientBeats { needed: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("at least {needed} samples required, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("reference values have zero variance")]
    DegenerateVariance,
    #[error("scores need both positive and negative labels")]
    SingleClass,
    #[error("{skipped} of {total} bootstrap resamples were degenerate")]
    TooManyDegenerateResamples { skipped: usize, total: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid extent {height}x{width}")]
    InvalidExtent { height: usize, width: usize },
    #[error("malformed tensor file: {0}")]
    TensorFormat(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable machine-readable identifier, used in CLI error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MissingKeypoint(_) => "MISSING_KEYPOINT",
            Error::DegenerateSegment(_) => "DEGENERATE_SEGMENT",
            Error::ShapeMismatch { .. } => "SHAPE_MISMATCH",
            Error::EmptyChannel(_) => "EMPTY_CHANNEL",
            Error::AllGaps => "ALL_GAPS",
            Error::NoBeatsDetected => "NO_BEATS_DETECTED",
            Error::EmptyBeats => "EMPTY_BEATS",
            Error::InsufficientBeats { .. } => "INSUFFICIENT_BEATS",
            Error::LengthMismatch { .. } => "LENGTH_MISMATCH",
            Error::TooFewSamples { .. } => "TOO_FEW_SAMPLES",
            Error::DegenerateVariance => "DEGENERATE_VARIANCE",
            Error::SingleClass => "SINGLE_CLASS",
            Error::TooManyDegenerateResamples { .. } => "DEGENERATE_RESAMPLES",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::InvalidExtent { .. } => "INVALID_EXTENT",
            Error::TensorFormat(_) => "TENSOR_FORMAT",
            Error::Io(_) => "IO",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
