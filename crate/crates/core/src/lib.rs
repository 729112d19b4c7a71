//! Reconstruction of high-resolution transient datacubes from a low-resolution
//! time-resolved (SPAD) measurement fused with a high-resolution time-integrated
//! (CCD) image.
//!
//! The numerical core is generic over the scalar type through [`Real`]; the
//! aliases at the crate root fix it to `f32` (the on-disk type) or `f64`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod datacube;
pub mod error;
pub mod forward_model;
pub mod scalar;
pub mod sensor_sim;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

pub use datacube::{IntensityImage, MapUnit, ScalarMap, SpadMeasurement, TransientCube};
pub use forward_model::{Boundary, FusionGeometry, SamplingOperator};
pub use solver::{NormMode, SolveReport, SolverConfig};

/// Single-precision datacube, matching the TRCB payload type.
pub type Cube = TransientCube<f32>;
/// Double-precision datacube used for solves that need the extra headroom.
pub type Cube64 = TransientCube<f64>;
pub type Measurement = SpadMeasurement<f32>;
pub type Measurement64 = SpadMeasurement<f64>;
pub type Image = IntensityImage<f32>;
pub type Image64 = IntensityImage<f64>;
