use rayon::prelude::*;

use super::blur::{blur, blur_adjoint, gaussian_kernel};
use super::{Boundary, FusionGeometry};
use crate::datacube::{SpadMeasurement, TransientCube};
use crate::error::{mismatch, Result};
use crate::scalar::Real;

fn window_offset(geometry: &FusionGeometry) -> usize {
    (geometry.factor() - geometry.active_width()) / 2
}

/// `S`: keeps the centered `a×a` window of every `r×r` block; dead blocks become zero.
pub fn mask<T: Real>(frame: &[T], geometry: &FusionGeometry) -> Result<Vec<T>> {
    geometry.check_high(frame.len())?;
    let (r, a, off) = (geometry.factor(), geometry.active_width(), window_offset(geometry));
    let cols = geometry.high_cols();
    let mut out = vec![T::zero(); frame.len()];
    for (idx, (o, &v)) in out.iter_mut().zip(frame).enumerate() {
        let (row, col) = (idx / cols, idx % cols);
        let inside = (off..off + a).contains(&(row % r)) && (off..off + a).contains(&(col % r));
        if inside && !geometry.dead_pixels().contains(&(row / r, col / r)) {
            *o = v;
        }
    }
    Ok(out)
}

/// `P`: sum pooling over `r×r` blocks.
pub fn downsample<T: Real>(frame: &[T], geometry: &FusionGeometry) -> Result<Vec<T>> {
    geometry.check_high(frame.len())?;
    let (r, cols, low_cols) = (geometry.factor(), geometry.high_cols(), geometry.low_cols());
    let mut out = vec![T::zero(); geometry.low_len()];
    for (idx, &v) in frame.iter().enumerate() {
        let (row, col) = (idx / cols, idx % cols);
        out[(row / r) * low_cols + col / r] += v;
    }
    Ok(out)
}

/// `Pᵀ`: copies every low-resolution value over its block.
pub fn downsample_adjoint<T: Real>(frame: &[T], geometry: &FusionGeometry) -> Result<Vec<T>> {
    geometry.check_low(frame.len())?;
    let (r, cols, low_cols) = (geometry.factor(), geometry.high_cols(), geometry.low_cols());
    Ok((0..geometry.high_len()).map(|idx| frame[(idx / cols / r) * low_cols + (idx % cols) / r]).collect())
}

/// `A = P·S·B` on one frame, evaluated as the literal composition.
pub fn apply_a<T: Real>(frame: &[T], geometry: &FusionGeometry) -> Result<Vec<T>> {
    downsample(&mask(&blur(frame, geometry)?, geometry)?, geometry)
}

/// `Aᵀ = Bᵀ·S·Pᵀ` on one frame, evaluated as the literal composition.
pub fn adjoint_a<T: Real>(frame: &[T], geometry: &FusionGeometry) -> Result<Vec<T>> {
    blur_adjoint(&mask(&downsample_adjoint(frame, geometry)?, geometry)?, geometry)
}

/// `A_τ`: applies `A` to every bin of the cube.
pub fn apply_a_tau<T: Real>(cube: &TransientCube<T>, geometry: &FusionGeometry) -> Result<SpadMeasurement<T>> {
    if cube.height() != geometry.high_rows() || cube.width() != geometry.high_cols() {
        return Err(mismatch(format!(
            "cube is {}×{}, geometry expects {}×{}",
            cube.height(),
            cube.width(),
            geometry.high_rows(),
            geometry.high_cols()
        )));
    }
    let op = SamplingOperator::new(geometry);
    let data = op.apply(cube.as_slice(), cube.bins())?;
    SpadMeasurement::new(
        geometry.low_rows(),
        geometry.low_cols(),
        cube.bins(),
        cube.bin_width_ps(),
        data,
        geometry.dead_pixels().clone(),
    )
}

/// `A_τᵀ`: back-projects a measurement onto the high-resolution grid.
pub fn adjoint_a_tau<T: Real>(meas: &SpadMeasurement<T>, geometry: &FusionGeometry) -> Result<TransientCube<T>> {
    if meas.height() != geometry.low_rows() || meas.width() != geometry.low_cols() {
        return Err(mismatch(format!(
            "measurement is {}×{}, geometry expects {}×{}",
            meas.height(),
            meas.width(),
            geometry.low_rows(),
            geometry.low_cols()
        )));
    }
    let op = SamplingOperator::new(geometry);
    let data = op.adjoint(meas.as_slice(), meas.bins())?;
    TransientCube::new(geometry.high_rows(), geometry.high_cols(), meas.bins(), meas.bin_width_ps(), data)
}

/// Nonzero span of one separable factor of a row of `A`.
#[derive(Debug, Clone)]
struct Factor<T> {
    start: usize,
    weights: Vec<T>,
}

/// 1D `Bᵀ` applied to the indicator of `[lo, lo + a)` on an axis of length `len`.
fn axis_factor<T: Real>(lo: usize, a: usize, len: usize, kernel: &[f64], boundary: Boundary) -> Factor<T> {
    let radius = (kernel.len() / 2) as isize;
    let mut acc = vec![0.0f64; len];
    for p in lo..lo + a {
        for (t, &w) in kernel.iter().enumerate() {
            let s = p as isize + t as isize - radius;
            let j = if (0..len as isize).contains(&s) {
                s as usize
            } else {
                match boundary {
                    Boundary::ZeroPad => continue,
                    Boundary::Replicate => s.clamp(0, len as isize - 1) as usize,
                }
            };
            acc[j] += w;
        }
    }
    let first = acc.iter().position(|&w| w != 0.0).unwrap_or(0);
    let last = acc.iter().rposition(|&w| w != 0.0).map_or(0, |i| i + 1);
    Factor { start: first, weights: acc[first..last.max(first)].iter().map(|&w| T::of(w)).collect() }
}

/// Fused, precomputed form of `A`.
///
/// Every row of `A` is the outer product of a row-axis and a column-axis factor
/// because the blur is separable and the active window is a rectangle. The
/// operator evaluates `A` and `Aᵀ` as two small separable contractions.
#[derive(Debug, Clone)]
pub struct SamplingOperator<T> {
    geometry: FusionGeometry,
    row_factors: Vec<Factor<T>>,
    col_factors: Vec<Factor<T>>,
    alive: Vec<bool>,
}

impl<T: Real> SamplingOperator<T> {
    pub fn new(geometry: &FusionGeometry) -> Self {
        let kernel = gaussian_kernel(geometry.blur_sigma());
        let (r, a, off) = (geometry.factor(), geometry.active_width(), window_offset(geometry));
        let row_factors = (0..geometry.low_rows())
            .map(|i| axis_factor(i * r + off, a, geometry.high_rows(), &kernel, geometry.boundary()))
            .collect();
        let col_factors = (0..geometry.low_cols())
            .map(|j| axis_factor(j * r + off, a, geometry.high_cols(), &kernel, geometry.boundary()))
            .collect();
        let alive = (0..geometry.low_len())
            .map(|q| !geometry.dead_pixels().contains(&(q / geometry.low_cols(), q % geometry.low_cols())))
            .collect();
        Self { geometry: geometry.clone(), row_factors, col_factors, alive }
    }

    pub fn geometry(&self) -> &FusionGeometry {
        &self.geometry
    }

    /// `A` on one high-resolution frame.
    pub fn apply_frame(&self, frame: &[T], out: &mut [T]) {
        let (rows, cols, low_cols) = (self.geometry.high_rows(), self.geometry.high_cols(), self.geometry.low_cols());
        // contract columns: partial[row][j]
        let mut partial = vec![T::zero(); rows * low_cols];
        for row in 0..rows {
            let line = &frame[row * cols..(row + 1) * cols];
            for (j, f) in self.col_factors.iter().enumerate() {
                partial[row * low_cols + j] = f.weights.iter().zip(&line[f.start..]).map(|(&w, &x)| w * x).sum();
            }
        }
        for (i, f) in self.row_factors.iter().enumerate() {
            for j in 0..low_cols {
                let q = i * low_cols + j;
                out[q] = if self.alive[q] {
                    f.weights.iter().enumerate().map(|(k, &w)| w * partial[(f.start + k) * low_cols + j]).sum()
                } else {
                    T::zero()
                };
            }
        }
    }

    /// `Aᵀ` on one low-resolution frame.
    pub fn adjoint_frame(&self, frame: &[T], out: &mut [T]) {
        let (rows, cols, low_cols) = (self.geometry.high_rows(), self.geometry.high_cols(), self.geometry.low_cols());
        let mut partial = vec![T::zero(); rows * low_cols];
        for (i, f) in self.row_factors.iter().enumerate() {
            for j in 0..low_cols {
                let q = i * low_cols + j;
                if !self.alive[q] {
                    continue;
                }
                let y = frame[q];
                for (k, &w) in f.weights.iter().enumerate() {
                    partial[(f.start + k) * low_cols + j] += w * y;
                }
            }
        }
        out.iter_mut().for_each(|v| *v = T::zero());
        for row in 0..rows {
            let line = &mut out[row * cols..(row + 1) * cols];
            for (j, f) in self.col_factors.iter().enumerate() {
                let t = partial[row * low_cols + j];
                if t == T::zero() {
                    continue;
                }
                for (o, &w) in line[f.start..].iter_mut().zip(&f.weights) {
                    *o += w * t;
                }
            }
        }
    }

    /// `A_τ` on a bin-major stack of `bins` high-resolution frames.
    pub fn apply(&self, stack: &[T], bins: usize) -> Result<Vec<T>> {
        let (hi, lo) = (self.geometry.high_len(), self.geometry.low_len());
        if stack.len() != hi * bins {
            return Err(mismatch(format!("expected {} values, got {}", hi * bins, stack.len())));
        }
        let mut out = vec![T::zero(); lo * bins];
        out.par_chunks_mut(lo).zip(stack.par_chunks(hi)).for_each(|(o, x)| self.apply_frame(x, o));
        Ok(out)
    }

    /// `A_τᵀ` on a bin-major stack of `bins` low-resolution frames.
    pub fn adjoint(&self, stack: &[T], bins: usize) -> Result<Vec<T>> {
        let (hi, lo) = (self.geometry.high_len(), self.geometry.low_len());
        if stack.len() != lo * bins {
            return Err(mismatch(format!("expected {} values, got {}", lo * bins, stack.len())));
        }
        let mut out = vec![T::zero(); hi * bins];
        out.par_chunks_mut(hi).zip(stack.par_chunks(lo)).for_each(|(o, y)| self.adjoint_frame(y, o));
        Ok(out)
    }
}
