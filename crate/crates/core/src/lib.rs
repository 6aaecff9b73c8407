//! Joint detection probability reconstruction for SPAD-array frame streams.
//!
//! Frames are simulated ([`sim`]) or read from disk ([`io`]), accumulated into
//! coincidence counts ([`jpd`]) and analysed for signal-to-noise ([`snr`]).
//! Normalized results are generic over [`Real`]; the aliases below fix the scalar.

pub mod error;
pub mod frame;
pub mod geometry;
pub mod io;
pub mod jpd;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod snr;

pub use error::{Error, Result};
pub use frame::{BitDepth, FrameBuffer};
pub use geometry::{Pixel, Roi, SensorGeometry, SymmetryCenter};
pub use jpd::{JpdAccumulator, Layout, Mode, ProjectionSpec};
pub use rng::RngPolicy;
pub use scalar::Real;
pub use sim::{SceneConfig, Simulator};

pub type Image = jpd::ProjectionImage<f64>;
pub type Image32 = jpd::ProjectionImage<f32>;
pub type Dense = jpd::DenseJpd<f64>;
pub type Dense32 = jpd::DenseJpd<f32>;
pub type ConditionalImage = jpd::Conditional<f64>;
pub type ConditionalImage32 = jpd::Conditional<f32>;
