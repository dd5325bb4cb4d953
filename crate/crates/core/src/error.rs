use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample rate must be positive")]
    ZeroSampleRate,

    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },

    #[error("no channels given")]
    NoChannels,

    #[error("sample rate mismatch: {expected} Hz vs {found} Hz")]
    RateMismatch { expected: u32, found: u32 },

    #[error("length mismatch: {expected} vs {found} samples")]
    LengthMismatch { expected: usize, found: usize },

    #[error("audio stream is empty")]
    EmptyAudio,

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty output path")]
    EmptyPath,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("negative frequency {0} Hz")]
    NegativeFrequency(f64),

    #[error("overlap {overlap} leaves a non-positive filter width")]
    InfeasibleOverlap { overlap: f64 },

    #[error("kernel of {len} taps exceeds the limit of {max}")]
    KernelTooLong { len: usize, max: usize },

    #[error("derivative order {0} is outside 0..=3")]
    InvalidDerivativeOrder(u8),

    #[error("input of {len} samples is shorter than the required {min}")]
    TooShort { len: usize, min: usize },

    #[error("MMD requires ≥2 channels, got {0}")]
    NeedTwoChannels(usize),

    #[error("requested {requested} DCT coefficients but frames hold only {available} samples")]
    TooManyCoefficients { requested: usize, available: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("clean signal has zero power")]
    SilentSignal,

    #[error("malformed feature file: {0}")]
    MalformedFeatures(String),
}
