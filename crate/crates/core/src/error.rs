use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV: {0}")]
    MalformedWav(String),

    #[error("unsupported WAV codec: {0}")]
    UnsupportedCodec(String),

    #[error("empty audio")]
    EmptyAudio,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient diversity: {0}")]
    InsufficientDiversity(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("not an AEMB file")]
    NotAemb,

    #[error("AEMB: {0}")]
    Aemb(String),

    #[error("row {0} not normalized")]
    RowNotNormalized(usize),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
