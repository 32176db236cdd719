use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Random construction could not satisfy the validity rules within its attempt budget.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("mask has {mask} bits but stencil has {segments} segments")]
    MaskLength { mask: usize, segments: usize },

    #[error("canvas size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("no solution stored for character {0:?}")]
    MissingSolution(char),

    #[error("malformed bitmap {path}: {message}")]
    Bitmap { path: PathBuf, message: String },

    #[error("malformed target set: {0}")]
    Targets(String),

    #[error("malformed stencil document at byte {offset}: {message}")]
    Document { offset: usize, message: String },

    #[error("unsupported document version {0}")]
    UnsupportedVersion(u32),

    #[error("malformed shape library (line {line}): {message}")]
    ShapeLibrary { line: usize, message: String },

    #[error("unknown shape asset {0:?}")]
    UnknownShape(String),

    #[error("active segment {0} has no shape assigned")]
    UnmappedIndex(usize),

    #[error("segment index {index} out of range for {len} segments")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("png encoding failed: {0}")]
    Png(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
