use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {value} on axis {axis} is outside [0, 2^21)")]
    CoordinateOutOfRange { axis: char, value: i64 },

    #[error("color value {0} is outside [0, 255]")]
    ColorOutOfRange(i64),

    #[error("point cloud must contain at least one point")]
    EmptyCloud,

    #[error("duplicate voxel position ({x}, {y}, {z})")]
    DuplicatePosition { x: u32, y: u32, z: u32 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("geometry mismatch between original and reconstructed frame {frame}")]
    GeometryMismatch { frame: usize },

    #[error("gof size must be in 1..=255, got {0}")]
    InvalidGofSize(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("variance must be non-negative and finite, got {0}")]
    InvalidVariance(f64),

    #[error("payload parse error at byte {offset} (frame {frame:?}): {reason}")]
    Parse { offset: usize, frame: Option<usize>, reason: String },

    #[error("payload does not match the reconstructed frames: {0}")]
    PayloadMismatch(String),

    #[error("ply: {0}")]
    Ply(String),

    #[error("reference frame is empty; no correspondence can be resolved")]
    EmptyReference,

    #[error("bd-rate: {0}")]
    BdRate(String),

    #[error("complexity ratio needs a positive anchor time")]
    ZeroAnchorTime,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(offset: usize, frame: Option<usize>, reason: impl Into<String>) -> Self {
        Error::Parse { offset, frame, reason: reason.into() }
    }
}
