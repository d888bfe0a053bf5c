//! Multi-target detection workbench for a pulsed LFM-CW radar.
//!
//! The crate simulates fast-time/slow-time dwell frames containing point
//! targets, correlated K-distributed sea clutter, and thermal noise, and
//! implements two families of detectors over the resulting range/Doppler
//! grid:
//!
//! * neural marginal detectors (a dimensional-alternating fully connected
//!   network per axis) fused with a classical projection map,
//! * cell-averaging and trimmed-mean CFAR plus a normalized adaptive
//!   matched filter baseline.
//!
//! Supporting modules cover dataset generation and serialization,
//! pre-processing, training (hand-rolled reverse-mode gradients, Adam,
//! plateau scheduling), detection metrics, and a sweep/replicate
//! experiment harness.
//!
//! All numeric code is generic over the scalar type through the [`Real`]
//! trait; `f64` is the default precision and `f32` is supported for the
//! training hot path. The aliases below fix the common `f64` shapes.

pub mod clutter;
pub mod dataset;
pub mod detectors;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod neural;
pub mod radar;
pub mod rdmap;
pub mod scalar;
pub mod seeds;

pub use error::{Error, Result};
pub use scalar::Real;

/// Library version, echoed into run manifests by downstream tools.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex dwell frame at default precision (fast-time rows, slow-time columns).
pub type Frame = radar::ComplexFrame<f64>;
/// Radar waveform/front-end description at default precision.
pub type RadarParams = radar::RadarParams<f64>;
/// Range/velocity search grid at default precision.
pub type Grid = radar::Grid<f64>;
/// Point target at default precision.
pub type Target = radar::Target<f64>;
/// Clutter description at default precision.
pub type ClutterSpec = clutter::ClutterSpec<f64>;
/// Marginal-detector network at default precision.
pub type Network = neural::NetworkParams<f64>;
