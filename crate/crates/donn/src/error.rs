use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: wrong magic number: expected {expected}, found {found}")]
    WrongMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated: need {expected} bytes for {what}, found {found}")]
    Truncated {
        path: PathBuf,
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: unsupported image dimensions {rows}x{cols}, expected 28x28")]
    BadDimensions {
        path: PathBuf,
        rows: u32,
        cols: u32,
    },

    #[error("unsupported checkpoint version {found} (this build reads version {expected})")]
    Version { expected: u32, found: u32 },

    #[error("checkpoint payload is {found} bytes, header declares {expected}")]
    PayloadLength { expected: usize, found: usize },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("non-finite loss ({value}) at epoch {epoch}, step {step}; training aborted")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        value: f64,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
