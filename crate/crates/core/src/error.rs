use thiserror::Error;

use crate::signals::wav::WavError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite sample value {0}")]
    NonFinite(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("window of {len} samples is too short (need more than {required})")]
    WindowTooShort { len: usize, required: usize },

    #[error("unstable autoregressive shaper: characteristic root of modulus {modulus:.6} is not inside the unit circle")]
    UnstableShaper { modulus: f64 },

    #[error("{0} has zero energy")]
    ZeroEnergy(&'static str),

    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: u32, right: u32 },

    #[error("no valid frames: every clean frame is silent")]
    NoValidFrames,

    #[error(transparent)]
    Wav(#[from] WavError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
