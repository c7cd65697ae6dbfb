use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the radiomix pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode audio: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("{path}: unsupported encoding: {reason}")]
    UnsupportedEncoding { path: PathBuf, reason: String },

    #[error("missing class directory for `{class}`: {path}")]
    MissingClassDir { class: String, path: PathBuf },

    #[error("no decodable audio files for class `{0}`")]
    EmptyClass(String),

    #[error("no signal content")]
    NoSignal,

    #[error("clip too short: need {needed} samples, have {available}")]
    TooShort { needed: usize, available: usize },

    #[error("loudness unmeasurable: no block passes the absolute gate")]
    Unmeasurable,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("event {onset:.3}-{offset:.3} lies outside the timeline [0, {limit:.3}]")]
    EventOutOfRange { onset: f64, offset: f64, limit: f64 },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{0}")]
    Format(String),

    #[error("mismatched file sets: {0}")]
    StemMismatch(String),

    #[error("example {index}: synthesis failed after {attempts} attempts: {last}")]
    SynthesisExhausted {
        index: u64,
        attempts: u32,
        last: String,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
