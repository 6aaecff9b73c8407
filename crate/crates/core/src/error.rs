use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("pixel ({x}, {y}) is outside the {what}")]
    OutOfRange { x: i64, y: i64, what: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("bad frame file: {0}")]
    Format(String),

    #[error("bit depth mismatch: expected {expected}-bit, found {found}-bit")]
    BitDepth { expected: u8, found: u8 },

    #[error("frame {index} is not binary (pixel value {value}); preprocess frames first")]
    NonBinary { index: u64, value: u8 },

    #[error("frame geometry {found:?} does not match expected {expected:?}")]
    ShapeMismatch {
        expected: (u16, u16),
        found: (u16, u16),
    },

    #[error("frame {found} arrived out of order (expected {expected})")]
    OutOfOrder { expected: u64, found: u64 },

    #[error("operation requires FULL mode: {0}")]
    Unsupported(String),

    #[error("dense JPD needs {needed} bytes, over the {budget}-byte budget; use PROJECTION_ONLY mode")]
    MemoryBudget { needed: u64, budget: u64 },

    #[error("accumulators cannot be merged: {0}")]
    Merge(String),

    #[error("numeric domain error: {0}")]
    Domain(String),

    #[error("degenerate region mask: {0}")]
    DegenerateMask(String),

    #[error("no peak above 5x background std (peak excess {excess:.3e}, background std {std:.3e})")]
    NoPeak { excess: f64, std: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code class: 2 config, 3 I/O, 4 numeric/domain.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Geometry(_)
            | Error::OutOfRange { .. }
            | Error::MemoryBudget { .. }
            | Error::Unsupported(_)
            | Error::DegenerateMask(_)
            | Error::ShapeMismatch { .. } => 2,
            Error::Io { .. }
            | Error::Stream(_)
            | Error::Format(_)
            | Error::BitDepth { .. }
            | Error::Image(_) => 3,
            Error::NonBinary { .. }
            | Error::OutOfOrder { .. }
            | Error::Merge(_)
            | Error::Domain(_)
            | Error::NoPeak { .. }
            | Error::Singular(_) => 4,
        }
    }
}
