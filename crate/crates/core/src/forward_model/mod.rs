//! Linear operators of the acquisition model and their adjoints.
//!
//! `A = P · S · B`: Gaussian defocus blur `B`, sparse active-area mask `S`,
//! sum-pooling downsample `P`. `A_τ` applies `A` to every time bin. The
//! auxiliary operators `T` (temporal integration), `K_h`/`K_l` (spatial
//! integration) and the per-frame forward-difference gradient complete the
//! set used by the reconstruction objective.

mod blur;
mod gradient;
mod integrate;
mod sampling;

use std::collections::BTreeSet;

pub use blur::{blur, blur_adjoint, gaussian_kernel};
pub use gradient::{gradient_2d, gradient_2d_adjoint, gradient_2d_raw};
pub(crate) use gradient::{gradient_adjoint_into, gradient_into};
pub use integrate::{
    integrate_space, integrate_space_adjoint, integrate_space_high, integrate_space_low, integrate_time,
    integrate_time_adjoint, integrate_time_raw,
};
pub use sampling::{
    adjoint_a, adjoint_a_tau, apply_a, apply_a_tau, downsample, downsample_adjoint, mask, SamplingOperator,
};

use crate::datacube::Pixel;
use crate::error::{invalid, mismatch, Result};

/// Blur boundary handling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Samples outside the frame read as zero.
    #[default]
    ZeroPad,
    /// Samples outside the frame read the nearest edge pixel.
    Replicate,
}

impl Boundary {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zero_pad" => Some(Boundary::ZeroPad),
            "replicate" => Some(Boundary::Replicate),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Boundary::ZeroPad => "zero_pad",
            Boundary::Replicate => "replicate",
        }
    }
}

/// Active-window side for an upsampling factor, from a 7 µm sensor on a 50 µm pitch.
pub fn default_active_width(factor: usize) -> usize {
    ((factor as f64 * 7.0 / 50.0).round() as usize).max(1)
}

/// Configuration of the forward model.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionGeometry {
    low_rows: usize,
    low_cols: usize,
    factor: usize,
    blur_sigma: f64,
    active_width: usize,
    boundary: Boundary,
    dead_pixels: BTreeSet<Pixel>,
}

impl FusionGeometry {
    /// `low_rows × low_cols` SPAD grid upsampled by `factor` on each axis.
    pub fn new(low_rows: usize, low_cols: usize, factor: usize, blur_sigma: f64) -> Result<Self> {
        let geometry = Self {
            low_rows,
            low_cols,
            factor,
            blur_sigma,
            active_width: default_active_width(factor.max(1)),
            boundary: Boundary::ZeroPad,
            dead_pixels: BTreeSet::new(),
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Geometry for a high-resolution grid, checking that it divides evenly.
    pub fn for_high_res(high_rows: usize, high_cols: usize, factor: usize, blur_sigma: f64) -> Result<Self> {
        if factor == 0 || !high_rows.is_multiple_of(factor) || !high_cols.is_multiple_of(factor) {
            return Err(mismatch(format!("{high_rows}×{high_cols} is not divisible by upsampling factor {factor}")));
        }
        Self::new(high_rows / factor, high_cols / factor, factor, blur_sigma)
    }

    pub fn with_active_width(mut self, active_width: usize) -> Result<Self> {
        self.active_width = active_width;
        self.validate()?;
        Ok(self)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Dead SPAD pixels modeled as zero response inside the mask.
    pub fn with_dead_pixels(mut self, dead_pixels: BTreeSet<Pixel>) -> Result<Self> {
        self.dead_pixels = dead_pixels;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.low_rows == 0 || self.low_cols == 0 {
            return Err(invalid("low-resolution grid must be at least 1×1"));
        }
        if self.factor == 0 {
            return Err(invalid("upsampling factor must be ≥ 1"));
        }
        if !(self.blur_sigma.is_finite() && self.blur_sigma >= 0.0) {
            return Err(invalid(format!("blur sigma must be ≥ 0, got {}", self.blur_sigma)));
        }
        if self.active_width == 0 || self.active_width > self.factor {
            return Err(invalid(format!("active width must lie in [1, {}], got {}", self.factor, self.active_width)));
        }
        if let Some(&(r, c)) = self.dead_pixels.iter().find(|&&(r, c)| r >= self.low_rows || c >= self.low_cols) {
            return Err(invalid(format!("dead pixel ({r}, {c}) outside the low-resolution grid")));
        }
        Ok(())
    }

    pub fn high_rows(&self) -> usize {
        self.low_rows * self.factor
    }

    pub fn high_cols(&self) -> usize {
        self.low_cols * self.factor
    }

    pub fn low_rows(&self) -> usize {
        self.low_rows
    }

    pub fn low_cols(&self) -> usize {
        self.low_cols
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn blur_sigma(&self) -> f64 {
        self.blur_sigma
    }

    pub fn active_width(&self) -> usize {
        self.active_width
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dead_pixels(&self) -> &BTreeSet<Pixel> {
        &self.dead_pixels
    }

    pub fn high_len(&self) -> usize {
        self.high_rows() * self.high_cols()
    }

    pub fn low_len(&self) -> usize {
        self.low_rows * self.low_cols
    }

    pub(crate) fn check_high(&self, len: usize) -> Result<()> {
        if len != self.high_len() {
            return Err(mismatch(format!(
                "expected a {}×{} frame ({} values), got {len}",
                self.high_rows(),
                self.high_cols(),
                self.high_len()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_low(&self, len: usize) -> Result<()> {
        if len != self.low_len() {
            return Err(mismatch(format!(
                "expected a {}×{} frame ({} values), got {len}",
                self.low_rows,
                self.low_cols,
                self.low_len()
            )));
        }
        Ok(())
    }
}
