use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("I/O error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("PLY schema error: {0}")]
    Schema(String),
    #[error("scene has no Gaussians")]
    EmptyScene,
    #[error("refusing to write an empty selection")]
    EmptySelection,
    #[error("camera error: {0}")]
    Camera(String),
    #[error("image error: {0}")]
    Image(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("{0}")]
    InvalidInput(String),
    #[error("no reliable seeds on the {0} side; widen thresholds or add input")]
    NoConfidentSeeds(&'static str),
    #[error("brute-force min-cut refuses graphs with {0} > 20 nodes")]
    TooLarge(usize),
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
