//! Error type shared by all tracker modules.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Patch crop requested with a zero-area source extent or output.
    #[error("degenerate patch")]
    DegeneratePatch,

    /// Global adaptation is undefined when the illumination map is
    /// identically zero (the normalizing log term vanishes).
    #[error("uniformly dark patch")]
    UniformlyDark,

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// Feature extraction needs at least one full cell.
    #[error("patch {width}x{height} smaller than one {cell_size}x{cell_size} cell")]
    PatchTooSmall {
        width: usize,
        height: usize,
        cell_size: usize,
    },

    #[error("invalid color-name table: {0}")]
    InvalidCnTable(String),

    #[error("invalid bounding box: {0}")]
    InvalidBBox(String),

    #[error("ground-truth line {line}: {message}")]
    GroundTruthParse { line: usize, message: String },

    #[error("sequence has {frames} frames but {entries} ground-truth lines")]
    GroundTruthCount { frames: usize, entries: usize },

    #[error("sequence {0}: no image frames found")]
    EmptySequence(PathBuf),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image {
            path: path.into(),
            source,
        }
    }
}
