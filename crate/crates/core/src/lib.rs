//! Wiener-filter enhancement of voxelized point-cloud color attributes.
//!
//! The crate is organised bottom-up:
//!
//! * [`cloud`], [`color`], [`ply`]: point clouds, YCbCr conversion and file I/O.
//! * [`morton`], [`neighbor`]: Morton codes and the six-face neighbor search.
//! * [`wiener`], [`classify`], [`rdo`]: filter estimation, variance classes
//!   and the rate-distortion gate.
//! * [`pipeline`], [`bitstream`]: the BWF, CIWF and VCWF encoders, decoder
//!   replay and the sidecar payload format.
//! * [`surrogate`]: a quantization codec that produces reconstructions.
//! * [`metrics`], [`stats`], [`synth`]: measurement, stationarity analysis
//!   and synthetic test content.

pub mod bitstream;
pub mod classify;
pub mod cloud;
pub mod color;
pub mod error;
pub mod metrics;
pub mod morton;
pub mod neighbor;
pub mod pipeline;
pub mod ply;
pub mod rdo;
pub mod stats;
pub mod surrogate;
pub mod synth;
pub mod wiener;

pub use cloud::{sort_by_morton, ColorTriple, FrameSequence, PointCloud, VoxelPosition};
pub use error::{Error, Result};
pub use pipeline::{
    decode_replay, encode_in_loop, encode_sequence, EncodedSequence, EncoderConfig, EnhancementMode, InLoopCoding,
};
