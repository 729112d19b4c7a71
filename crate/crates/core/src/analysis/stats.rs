use crate::datacube::{ScalarMap, TransientCube};
use crate::error::{mismatch, Error, Result};
use crate::scalar::Real;

use super::depth::{depth_map, DEFAULT_SNR_THRESHOLD};

/// Equal-width histogram over `[min, max]` of the non-sentinel values.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(map: &ScalarMap) -> Result<Summary> {
    let count = map.valid_count();
    if count == 0 {
        return Err(Error::EmptyMap);
    }
    let mean = map.valid().sum::<f64>() / count as f64;
    let var = map.valid().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
    let (min, max) = map.valid().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(Summary { count, mean, std: var.sqrt(), min, max })
}

/// Values equal to the maximum land in the last bin; a constant map fills the first.
pub fn lifetime_histogram(map: &ScalarMap, bin_count: usize) -> Result<Histogram> {
    if bin_count == 0 {
        return Err(crate::error::invalid("bin_count must be ≥ 1"));
    }
    let s = summarize(map)?;
    let width = (s.max - s.min) / bin_count as f64;
    let edges = (0..=bin_count).map(|i| if i == bin_count { s.max } else { s.min + i as f64 * width }).collect();
    let mut counts = vec![0; bin_count];
    for v in map.valid() {
        let idx = if width > 0.0 { (((v - s.min) / width) as usize).min(bin_count - 1) } else { 0 };
        counts[idx] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Block-averages `a` (non-sentinel entries only) down to the grid of `b` and subtracts `b`.
pub fn diff_map(a: &ScalarMap, b: &ScalarMap, block: usize) -> Result<ScalarMap> {
    if block == 0 || a.height() != b.height() * block || a.width() != b.width() * block {
        return Err(mismatch(format!(
            "cannot difference a {}×{} map against {}×{} with block {block}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    let mut values = Vec::with_capacity(b.height() * b.width());
    for r in 0..b.height() {
        for c in 0..b.width() {
            let (mut sum, mut n) = (0.0, 0usize);
            for dr in 0..block {
                for dc in 0..block {
                    if let Some(v) = a.get(r * block + dr, c * block + dc) {
                        sum += v;
                        n += 1;
                    }
                }
            }
            values.push(match (n, b.get(r, c)) {
                (0, _) | (_, None) => None,
                (n, Some(bv)) => Some(sum / n as f64 - bv),
            });
        }
    }
    ScalarMap::new(b.height(), b.width(), a.unit(), values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// dB, capped to ±999.
    pub psnr: f64,
    pub rmse: f64,
    /// RMS depth difference over pixels valid in both depth maps; `None` if there are none.
    pub depth_rmse_bins: Option<f64>,
}

pub const PSNR_CAP: f64 = 999.0;

/// [`metrics_with_threshold`] at the default depth threshold.
pub fn metrics<T: Real>(recon: &TransientCube<T>, truth: &TransientCube<T>) -> Result<Metrics> {
    metrics_with_threshold(recon, truth, DEFAULT_SNR_THRESHOLD)
}

pub fn metrics_with_threshold<T: Real>(
    recon: &TransientCube<T>,
    truth: &TransientCube<T>,
    snr_threshold: f64,
) -> Result<Metrics> {
    if !recon.same_shape(truth) {
        return Err(mismatch(format!(
            "reconstruction is {}×{}×{}, truth is {}×{}×{}",
            recon.height(),
            recon.width(),
            recon.bins(),
            truth.height(),
            truth.width(),
            truth.bins()
        )));
    }
    let sq: f64 = recon.as_slice().iter().zip(truth.as_slice()).map(|(&a, &b)| (a.as_f64() - b.as_f64()).powi(2)).sum();
    let rmse = (sq / recon.as_slice().len() as f64).sqrt();
    let peak = truth.max_value().as_f64();
    let psnr = if rmse == 0.0 { PSNR_CAP } else { (20.0 * (peak / rmse).log10()).clamp(-PSNR_CAP, PSNR_CAP) };
    let psnr = if psnr.is_nan() { -PSNR_CAP } else { psnr };

    let (dr, dt) = (depth_map(recon, snr_threshold), depth_map(truth, snr_threshold));
    let pairs: Vec<f64> =
        dr.values().iter().zip(dt.values()).filter_map(|(a, b)| Some(a.as_ref()? - b.as_ref()?)).collect();
    let depth_rmse_bins =
        (!pairs.is_empty()).then(|| (pairs.iter().map(|d| d * d).sum::<f64>() / pairs.len() as f64).sqrt());
    Ok(Metrics { psnr, rmse, depth_rmse_bins })
}
