//! Measurement simulation.
//!
//! Randomness is drawn from counter-addressed ChaCha streams: every SPAD pixel,
//! CCD pixel and the dead-pixel draw has its own stream derived from the seed,
//! so results do not depend on how the work is split across threads.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::config::{render, KeyValues};
use crate::datacube::{IntensityImage, Pixel, SpadMeasurement, TransientCube};
use crate::error::{invalid, mismatch, Result};
use crate::forward_model::{apply_a_tau, integrate_time, FusionGeometry};
use crate::scalar::Real;

const STREAM_SPAD: u64 = 0;
const STREAM_CCD: u64 = 1;
const STREAM_DEAD: u64 = 2;

fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 56) | index);
    rng
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean > 0.0 {
        Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(mean)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    /// Expected total signal counts after scaling the truth; `None` keeps it as is.
    pub photon_scale: Option<f64>,
    /// Expected ambient counts per SPAD pixel per bin.
    pub ambient_rate: f64,
    pub dead_pixel_fraction: f64,
    pub seed: u64,
    /// `false` gives the noiseless expected counts.
    pub poisson: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { photon_scale: None, ambient_rate: 0.0, dead_pixel_fraction: 0.0, seed: 0, poisson: true }
    }
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self { poisson: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(scale) = self.photon_scale {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(invalid(format!("photon_scale must be > 0, got {scale}")));
            }
        }
        if !(self.ambient_rate.is_finite() && self.ambient_rate >= 0.0) {
            return Err(invalid(format!("ambient_rate must be ≥ 0, got {}", self.ambient_rate)));
        }
        if !(0.0..1.0).contains(&self.dead_pixel_fraction) {
            return Err(invalid(format!("dead_pixel_fraction must lie in [0, 1), got {}", self.dead_pixel_fraction)));
        }
        Ok(())
    }

    /// Consumes `photon_scale`, `ambient_rate`, `dead_pixel_fraction`, `seed`, `poisson`.
    pub fn from_key_values(kv: &mut KeyValues) -> Result<Self> {
        let defaults = Self::default();
        let spec = Self {
            photon_scale: kv.optional("photon_scale")?,
            ambient_rate: kv.optional("ambient_rate")?.unwrap_or(defaults.ambient_rate),
            dead_pixel_fraction: kv.optional("dead_pixel_fraction")?.unwrap_or(defaults.dead_pixel_fraction),
            seed: kv.optional("seed")?.unwrap_or(defaults.seed),
            poisson: kv.optional("poisson")?.unwrap_or(defaults.poisson),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_entries(&self) -> Vec<(String, String)> {
        let mut entries = Vec::new();
        if let Some(scale) = self.photon_scale {
            entries.push(("photon_scale".into(), scale.to_string()));
        }
        entries.push(("ambient_rate".into(), self.ambient_rate.to_string()));
        entries.push(("dead_pixel_fraction".into(), self.dead_pixel_fraction.to_string()));
        entries.push(("seed".into(), self.seed.to_string()));
        entries.push(("poisson".into(), self.poisson.to_string()));
        entries
    }

    pub fn to_config(&self) -> String {
        render(&self.to_entries())
    }
}

/// Draws `round(fraction · rows · cols)` distinct dead pixels, at least one when `fraction > 0`.
pub fn sample_dead_pixels(rows: usize, cols: usize, fraction: f64, seed: u64) -> BTreeSet<Pixel> {
    let total = rows * cols;
    if fraction <= 0.0 || total == 0 {
        return BTreeSet::new();
    }
    let count = ((fraction * total as f64).round() as usize).clamp(1, total);
    let mut rng = stream(seed, STREAM_DEAD, 0);
    let mut order: Vec<usize> = (0..total).collect();
    for i in 0..count {
        let j = rng.random_range(i..total);
        order.swap(i, j);
    }
    order[..count].iter().map(|&q| (q / cols, q % cols)).collect()
}

/// Simulates the SPAD and CCD arms for a ground-truth cube.
///
/// SPAD: the truth is scaled to `photon_scale`, passed through `A_τ`, offset
/// by `ambient_rate`, Poisson sampled per pixel and bin, and sampled dead
/// pixels are zeroed and recorded. CCD: the same scaled truth is integrated
/// over time and Poisson sampled per pixel.
pub fn simulate_pair<T: Real>(
    truth: &TransientCube<T>,
    geometry: &FusionGeometry,
    noise: &NoiseSpec,
) -> Result<(SpadMeasurement<T>, IntensityImage<T>)> {
    noise.validate()?;
    if truth.height() != geometry.high_rows() || truth.width() != geometry.high_cols() {
        return Err(mismatch(format!(
            "truth is {}×{}, geometry expects {}×{}",
            truth.height(),
            truth.width(),
            geometry.high_rows(),
            geometry.high_cols()
        )));
    }
    let total = truth.sum();
    let scale = match noise.photon_scale {
        Some(target) if total > 0.0 => target / total,
        _ => 1.0,
    };
    let scaled = if scale == 1.0 { truth.clone() } else { truth.scaled(scale)? };

    let expected = apply_a_tau(&scaled, geometry)?;
    let (lo, bins) = (geometry.low_len(), truth.bins());
    let cols = geometry.low_cols();
    let mut dead = sample_dead_pixels(geometry.low_rows(), cols, noise.dead_pixel_fraction, noise.seed);
    dead.extend(geometry.dead_pixels().iter().copied());

    let expected = expected.as_slice();
    let traces: Vec<Vec<T>> = (0..lo)
        .into_par_iter()
        .map(|q| {
            if dead.contains(&(q / cols, q % cols)) {
                return vec![T::zero(); bins];
            }
            let mut rng = stream(noise.seed, STREAM_SPAD, q as u64);
            (0..bins)
                .map(|b| {
                    let mean = expected[b * lo + q].as_f64() + noise.ambient_rate;
                    T::of(if noise.poisson { poisson(&mut rng, mean) } else { mean })
                })
                .collect()
        })
        .collect();
    let mut spad = vec![T::zero(); lo * bins];
    for (q, trace) in traces.iter().enumerate() {
        for (b, &v) in trace.iter().enumerate() {
            spad[b * lo + q] = v;
        }
    }
    let meas = SpadMeasurement::new(geometry.low_rows(), cols, bins, truth.bin_width_ps(), spad, dead)?;

    let ccd_mean = integrate_time(&scaled)?;
    let ccd: Vec<T> = ccd_mean
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(p, &mean)| {
            if noise.poisson {
                let mut rng = stream(noise.seed, STREAM_CCD, p as u64);
                T::of(poisson(&mut rng, mean.as_f64()))
            } else {
                mean
            }
        })
        .collect();
    let image = IntensityImage::new(truth.height(), truth.width(), ccd)?;
    Ok((meas, image))
}

/// Builds the low-resolution input and the intensity image from a full-resolution
/// FLIM cube: `d = A_τ(full)`, `c = T(full)`.
pub fn emulate_flim_input<T: Real>(
    full: &TransientCube<T>,
    geometry: &FusionGeometry,
) -> Result<(SpadMeasurement<T>, IntensityImage<T>)> {
    Ok((apply_a_tau(full, geometry)?, integrate_time(full)?))
}
