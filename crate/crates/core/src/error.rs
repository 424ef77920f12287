use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt audio file: {0}")]
    CorruptFile(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid length {len}: {reason}")]
    InvalidLength { len: usize, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("not a frame: diagonal entry {value:e} at index {index} ({count} nonpositive entries)")]
    NotAFrame { index: usize, value: f64, count: usize },

    #[error("invalid stretch rate {0}")]
    InvalidRate(f64),

    #[error("infeasible stretch rate {rate}: transient-locked hops need at least rate {min_rate:.6}")]
    InfeasibleRate { rate: f64, min_rate: f64 },

    #[error("degenerate parabola: peak is not strictly above its neighbours")]
    DegenerateParabola,

    #[error("phase state mismatch: {0}")]
    StateMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    /// Stable variant name, used for diagnostics and exit-code mapping.
    pub fn name(&self) -> &'static str {
        match self {
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::CorruptFile(_) => "CorruptFile",
            Error::Io(_) => "IoError",
            Error::InvalidSignal(_) => "InvalidSignal",
            Error::InvalidLength { .. } => "InvalidLength",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NotAFrame { .. } => "NotAFrame",
            Error::InvalidRate(_) => "InvalidRate",
            Error::InfeasibleRate { .. } => "InfeasibleRate",
            Error::DegenerateParabola => "DegenerateParabola",
            Error::StateMismatch(_) => "StateMismatch",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Serialization(_) => "SerializationError",
        }
    }
}
