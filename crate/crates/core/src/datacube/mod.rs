//! Datacube, measurement and image containers.
//!
//! Cubes are stored bin-major: every pixel of bin 0, then bin 1, and so on,
//! with each frame row-major. A frame is therefore a contiguous slice.

mod io;

use std::collections::BTreeSet;

pub use io::{
    export_map, read_cube, read_dead_pixels, read_image, read_measurement, write_cube, write_dead_pixels, write_image,
    write_measurement, MapFormat, TRCB_HEADER_LEN,
};

use crate::error::{invalid, mismatch, Result};
use crate::scalar::Real;

/// Low-resolution pixel position `(row, col)`.
pub type Pixel = (usize, usize);

fn check_dims(height: usize, width: usize, bins: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(invalid(format!("image dimensions must be ≥ 1, got {height}×{width}")));
    }
    if bins == 0 {
        return Err(invalid("bins must be ≥ 1"));
    }
    Ok(())
}

fn check_bin_width(bin_width_ps: f64) -> Result<()> {
    if !(bin_width_ps.is_finite() && bin_width_ps > 0.0) {
        return Err(invalid(format!("bin width must be > 0 ps, got {bin_width_ps}")));
    }
    Ok(())
}

fn check_values<T: Real>(values: &[T], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(mismatch(format!("expected {expected} values, got {}", values.len())));
    }
    if let Some(pos) = values.iter().position(|v| !(v.is_finite() && *v >= T::zero())) {
        return Err(invalid(format!("values must be finite and ≥ 0 (index {pos} is {})", values[pos])));
    }
    Ok(())
}

/// Time-resolved image `i(row, col, bin)` of nonnegative photon counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientCube<T> {
    height: usize,
    width: usize,
    bins: usize,
    bin_width_ps: f64,
    data: Vec<T>,
}

impl<T: Real> TransientCube<T> {
    pub fn new(height: usize, width: usize, bins: usize, bin_width_ps: f64, data: Vec<T>) -> Result<Self> {
        check_dims(height, width, bins)?;
        check_bin_width(bin_width_ps)?;
        check_values(&data, height * width * bins)?;
        Ok(Self { height, width, bins, bin_width_ps, data })
    }

    pub fn zeros(height: usize, width: usize, bins: usize, bin_width_ps: f64) -> Result<Self> {
        Self::new(height, width, bins, bin_width_ps, vec![T::zero(); height * width * bins])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn bin_width_ps(&self) -> f64 {
        self.bin_width_ps
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn frame(&self, bin: usize) -> &[T] {
        let n = self.frame_len();
        &self.data[bin * n..(bin + 1) * n]
    }

    pub fn get(&self, row: usize, col: usize, bin: usize) -> T {
        self.data[bin * self.frame_len() + row * self.width + col]
    }

    /// Temporal histogram of one pixel.
    pub fn trace(&self, row: usize, col: usize) -> Vec<T> {
        let n = self.frame_len();
        let offset = row * self.width + col;
        (0..self.bins).map(|b| self.data[b * n + offset]).collect()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64()).sum()
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::zero(), T::max)
    }

    /// Elementwise scaling by a nonnegative factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(invalid(format!("scale factor must be finite and ≥ 0, got {factor}")));
        }
        let k = T::of(factor);
        Ok(Self { data: self.data.iter().map(|&v| v * k).collect(), ..self.clone() })
    }

    pub fn cast<U: Real>(&self) -> TransientCube<U> {
        TransientCube {
            height: self.height,
            width: self.width,
            bins: self.bins,
            bin_width_ps: self.bin_width_ps,
            data: crate::scalar::cast_slice(&self.data),
        }
    }

    pub fn same_shape<U>(&self, other: &TransientCube<U>) -> bool {
        self.height == other.height && self.width == other.width && self.bins == other.bins
    }
}

/// Low-resolution time-resolved measurement `d` with its dead-pixel record.
#[derive(Debug, Clone, PartialEq)]
pub struct SpadMeasurement<T> {
    cube: TransientCube<T>,
    dead_pixels: BTreeSet<Pixel>,
}

impl<T: Real> SpadMeasurement<T> {
    pub fn new(
        height: usize,
        width: usize,
        bins: usize,
        bin_width_ps: f64,
        data: Vec<T>,
        dead_pixels: BTreeSet<Pixel>,
    ) -> Result<Self> {
        let cube = TransientCube::new(height, width, bins, bin_width_ps, data)?;
        Self::from_cube(cube, dead_pixels)
    }

    /// Wraps a cube, checking that every dead pixel lies on the grid and reads zero.
    pub fn from_cube(cube: TransientCube<T>, dead_pixels: BTreeSet<Pixel>) -> Result<Self> {
        for &(r, c) in &dead_pixels {
            if r >= cube.height || c >= cube.width {
                return Err(invalid(format!("dead pixel ({r}, {c}) outside the {}×{} grid", cube.height, cube.width)));
            }
            if (0..cube.bins).any(|b| cube.get(r, c, b) != T::zero()) {
                return Err(invalid(format!("dead pixel ({r}, {c}) has nonzero counts")));
            }
        }
        Ok(Self { cube, dead_pixels })
    }

    pub fn cube(&self) -> &TransientCube<T> {
        &self.cube
    }

    pub fn into_cube(self) -> TransientCube<T> {
        self.cube
    }

    pub fn dead_pixels(&self) -> &BTreeSet<Pixel> {
        &self.dead_pixels
    }

    pub fn height(&self) -> usize {
        self.cube.height
    }

    pub fn width(&self) -> usize {
        self.cube.width
    }

    pub fn bins(&self) -> usize {
        self.cube.bins
    }

    pub fn bin_width_ps(&self) -> f64 {
        self.cube.bin_width_ps
    }

    pub fn as_slice(&self) -> &[T] {
        self.cube.as_slice()
    }

    pub fn sum(&self) -> f64 {
        self.cube.sum()
    }

    pub fn cast<U: Real>(&self) -> SpadMeasurement<U> {
        SpadMeasurement { cube: self.cube.cast(), dead_pixels: self.dead_pixels.clone() }
    }
}

/// High-resolution time-integrated image `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> IntensityImage<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        check_dims(height, width, 1)?;
        check_values(&data, height * width)?;
        Ok(Self { height, width, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(invalid(format!("scale factor must be finite and ≥ 0, got {factor}")));
        }
        let k = T::of(factor);
        Self::new(self.height, self.width, self.data.iter().map(|&v| v * k).collect())
    }

    pub fn cast<U: Real>(&self) -> IntensityImage<U> {
        IntensityImage { height: self.height, width: self.width, data: crate::scalar::cast_slice(&self.data) }
    }
}

/// Physical meaning of the values in a [`ScalarMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapUnit {
    TimeBin,
    Picoseconds,
    Nanoseconds,
    Dimensionless,
}

impl MapUnit {
    pub fn name(self) -> &'static str {
        match self {
            MapUnit::TimeBin => "time_bin",
            MapUnit::Picoseconds => "ps",
            MapUnit::Nanoseconds => "ns",
            MapUnit::Dimensionless => "dimensionless",
        }
    }
}

/// Per-pixel scalar map (depth, lifetime, differences). `None` marks "no data".
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    height: usize,
    width: usize,
    unit: MapUnit,
    values: Vec<Option<f64>>,
}

impl ScalarMap {
    pub fn new(height: usize, width: usize, unit: MapUnit, values: Vec<Option<f64>>) -> Result<Self> {
        check_dims(height, width, 1)?;
        if values.len() != height * width {
            return Err(mismatch(format!("expected {} map values, got {}", height * width, values.len())));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("map values must be finite (use the sentinel for missing data)"));
        }
        Ok(Self { height, width, unit, values })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn unit(&self) -> MapUnit {
        self.unit
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.width + col]
    }

    /// Non-sentinel values in row-major order.
    pub fn valid(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}
