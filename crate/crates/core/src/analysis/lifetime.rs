use rayon::prelude::*;

use crate::config::KeyValues;
use crate::datacube::{MapUnit, ScalarMap, TransientCube};
use crate::error::{invalid, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeFitConfig {
    /// Lower clamp, ns.
    pub min_lifetime: f64,
    /// Upper clamp, ns.
    pub max_lifetime: f64,
    /// Minimum total counts for a pixel to be fitted.
    pub min_counts: f64,
    /// Bins from the peak (inclusive) to fit; `None` fits to the end of the trace.
    pub fit_window: Option<usize>,
    pub max_fit_iters: usize,
    /// Relative parameter-step tolerance.
    pub fit_tol: f64,
}

impl Default for LifetimeFitConfig {
    fn default() -> Self {
        Self {
            min_lifetime: 1.0,
            max_lifetime: 7.0,
            min_counts: 50.0,
            fit_window: None,
            max_fit_iters: 100,
            fit_tol: 1e-12,
        }
    }
}

impl LifetimeFitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_lifetime > 0.0 && self.min_lifetime < self.max_lifetime && self.max_lifetime.is_finite()) {
            return Err(invalid(format!(
                "lifetime bounds must satisfy 0 < min < max, got [{}, {}]",
                self.min_lifetime, self.max_lifetime
            )));
        }
        if !(self.min_counts >= 0.0 && self.min_counts.is_finite()) {
            return Err(invalid(format!("min_counts must be ≥ 0, got {}", self.min_counts)));
        }
        if self.fit_window.is_some_and(|w| w < 2) {
            return Err(invalid("fit_window must cover at least 2 bins"));
        }
        if self.max_fit_iters == 0 || !(self.fit_tol > 0.0) {
            return Err(invalid("max_fit_iters must be ≥ 1 and fit_tol > 0"));
        }
        Ok(())
    }

    /// Overrides fields present in `kv`, starting from `self`.
    pub fn update_from(mut self, kv: &mut KeyValues) -> Result<Self> {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = kv.optional(stringify!($field))? {
                    self.$field = v;
                }
            };
        }
        take!(min_lifetime);
        take!(max_lifetime);
        take!(min_counts);
        take!(max_fit_iters);
        take!(fit_tol);
        if let Some(w) = kv.optional::<usize>("fit_window")? {
            self.fit_window = Some(w);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn to_entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("min_lifetime".into(), self.min_lifetime.to_string()),
            ("max_lifetime".into(), self.max_lifetime.to_string()),
            ("min_counts".into(), self.min_counts.to_string()),
        ];
        if let Some(w) = self.fit_window {
            out.push(("fit_window".into(), w.to_string()));
        }
        out.push(("max_fit_iters".into(), self.max_fit_iters.to_string()));
        out.push(("fit_tol".into(), self.fit_tol.to_string()));
        out
    }
}

/// Per-pixel outcome of a lifetime fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitFlag {
    Fitted,
    /// Fitted, then clamped to the lifetime bounds.
    Clamped,
    BelowThreshold,
    /// Fewer than two bins between the peak and the end of the trace.
    TooFewBins,
    NonFinite,
}

impl FitFlag {
    pub fn name(self) -> &'static str {
        match self {
            FitFlag::Fitted => "fitted",
            FitFlag::Clamped => "clamped",
            FitFlag::BelowThreshold => "below_threshold",
            FitFlag::TooFewBins => "too_few_bins",
            FitFlag::NonFinite => "non_finite",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeFit {
    /// Lifetimes in ns.
    pub map: ScalarMap,
    /// Row-major, one per pixel.
    pub flags: Vec<FitFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceFit {
    pub amplitude: f64,
    /// Unclamped lifetime, ns.
    pub lifetime: f64,
    pub iterations: usize,
}

/// Weighted log-linear regression of `ln y` on `t`, using the positive samples.
fn log_linear(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let (mut sw, mut st, mut sl, mut stt, mut stl) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        if yi > 0.0 {
            let l = yi.ln();
            sw += yi;
            st += yi * ti;
            sl += yi * l;
            stt += yi * ti * ti;
            stl += yi * ti * l;
        }
    }
    let det = sw * stt - st * st;
    if !(det > 0.0) {
        return None;
    }
    let slope = (sw * stl - st * sl) / det;
    let intercept = (sl - slope * st) / sw;
    Some((intercept.exp(), -slope))
}

fn cost(t: &[f64], y: &[f64], a: f64, k: f64) -> f64 {
    t.iter().zip(y).map(|(&ti, &yi)| (a * (-k * ti).exp() - yi).powi(2)).sum()
}

/// Least-squares fit of `a·exp(−t/λ)` by damped Gauss–Newton (Levenberg–Marquardt).
///
/// `t` is in ns. Returns `None` if the fit does not stay finite.
pub fn fit_trace(t: &[f64], y: &[f64], max_iters: usize, tol: f64) -> Option<TraceFit> {
    let span = t.last()? - t.first()?;
    let (mut a, mut k) =
        log_linear(t, y).unwrap_or_else(|| (y.iter().copied().fold(0.0, f64::max), 2.0 / span.max(1e-12)));
    let mut current = cost(t, y, a, k);
    if !current.is_finite() {
        return None;
    }
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < max_iters && current > 0.0 {
        iterations += 1;
        let (mut jaa, mut jak, mut jkk, mut ga, mut gk) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&ti, &yi) in t.iter().zip(y) {
            let e = (-k * ti).exp();
            let r = a * e - yi;
            let (da, dk) = (e, -a * ti * e);
            jaa += da * da;
            jak += da * dk;
            jkk += dk * dk;
            ga += da * r;
            gk += dk * r;
        }
        let mut accepted = false;
        while mu < 1e12 {
            let (m11, m22) = (jaa * (1.0 + mu), jkk * (1.0 + mu));
            let det = m11 * m22 - jak * jak;
            if !(det > 0.0) {
                mu *= 10.0;
                continue;
            }
            let step_a = -(m22 * ga - jak * gk) / det;
            let step_k = -(m11 * gk - jak * ga) / det;
            let trial = cost(t, y, a + step_a, k + step_k);
            if trial.is_finite() && trial <= current {
                a += step_a;
                k += step_k;
                current = trial;
                mu = (mu / 10.0).max(1e-12);
                accepted = true;
                let rel = (step_a / a.abs().max(f64::MIN_POSITIVE)).hypot(step_k / k.abs().max(f64::MIN_POSITIVE));
                if rel < tol {
                    return finite(a, k, iterations);
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    finite(a, k, iterations)
}

fn finite(a: f64, k: f64, iterations: usize) -> Option<TraceFit> {
    if !(a.is_finite() && k.is_finite()) {
        return None;
    }
    // a non-positive rate is a flat or rising trace: lifetime beyond any bound
    let lifetime = if k > 0.0 { 1.0 / k } else { f64::INFINITY };
    Some(TraceFit { amplitude: a, lifetime, iterations })
}

/// Fits a single-exponential decay after the peak of every pixel with enough counts.
pub fn fit_lifetimes<T: Real>(cube: &TransientCube<T>, config: &LifetimeFitConfig) -> Result<LifetimeFit> {
    config.validate()?;
    let (n, bins) = (cube.frame_len(), cube.bins());
    let bin_ns = cube.bin_width_ps() / 1000.0;
    let data = cube.as_slice();
    let results: Vec<(Option<f64>, FitFlag)> = (0..n)
        .into_par_iter()
        .map(|p| {
            let trace: Vec<f64> = (0..bins).map(|b| data[b * n + p].as_f64()).collect();
            if trace.iter().sum::<f64>() < config.min_counts || trace.iter().all(|&v| v <= 0.0) {
                return (None, FitFlag::BelowThreshold);
            }
            let mut peak = 0;
            for (b, &v) in trace.iter().enumerate() {
                if v > trace[peak] {
                    peak = b;
                }
            }
            let end = config.fit_window.map_or(bins, |w| (peak + w).min(bins));
            if end - peak < 2 {
                return (None, FitFlag::TooFewBins);
            }
            let t: Vec<f64> = (0..end - peak).map(|i| i as f64 * bin_ns).collect();
            match fit_trace(&t, &trace[peak..end], config.max_fit_iters, config.fit_tol) {
                None => (None, FitFlag::NonFinite),
                Some(fit) => {
                    let clamped = fit.lifetime.clamp(config.min_lifetime, config.max_lifetime);
                    let flag = if clamped == fit.lifetime { FitFlag::Fitted } else { FitFlag::Clamped };
                    (Some(clamped), flag)
                }
            }
        })
        .collect();
    let (values, flags) = results.into_iter().unzip();
    Ok(LifetimeFit { map: ScalarMap::new(cube.height(), cube.width(), MapUnit::Nanoseconds, values)?, flags })
}
