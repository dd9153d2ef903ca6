use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {actual} samples, grid expects {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("grid specifications do not match")]
    SpecMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("surface geometry was built without a time derivative of the height")]
    StaticSurface,

    #[error("unknown scene `{0}`")]
    UnknownScene(String),

    #[error("scene motion leaves the parameter domain at frame {frame}")]
    MotionLeavesDomain { frame: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: file does not exist", path.display())]
    MissingFile { path: PathBuf },

    #[error("{}: expected {expected}, found {found}", path.display())]
    DimensionMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{}: non-finite sample at index {index}", path.display())]
    NonFiniteSample { path: PathBuf, index: usize },

    #[error("{}: malformed header: {reason}", path.display())]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{}: truncated payload (expected {expected} bytes, found {found})", path.display())]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{}: bad flow magic {found}", path.display())]
    BadMagic { path: PathBuf, found: f32 },

    #[error("{}: invalid manifest: {reason}", path.display())]
    Manifest { path: PathBuf, reason: String },
}

impl Error {
    /// True for failures caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::MissingFile { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFiniteSample { .. }
                | Error::MalformedHeader { .. }
                | Error::Truncated { .. }
                | Error::BadMagic { .. }
                | Error::Manifest { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
