use crate::datacube::{IntensityImage, SpadMeasurement, TransientCube};
use crate::error::{mismatch, Result};
use crate::forward_model::{gradient_into, integrate_space, integrate_time_raw, FusionGeometry, SamplingOperator};
use crate::scalar::Real;

use super::config::{NormMode, SolverConfig};

/// Unweighted values of the five objective terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveTerms {
    /// `‖A_τ i − d‖`
    pub data: f64,
    /// `‖T i − c‖`
    pub ccd: f64,
    /// `‖K_h i − K_l d‖`
    pub histogram: f64,
    /// `‖i‖₁`
    pub l1: f64,
    /// `‖∇₂D i‖₁`, anisotropic
    pub tv: f64,
}

impl ObjectiveTerms {
    /// Terms multiplied by `(1, α, β, γ, δ)`.
    pub fn weighted(&self, config: &SolverConfig) -> [f64; 5] {
        [
            self.data,
            config.alpha * self.ccd,
            config.beta * self.histogram,
            config.gamma * self.l1,
            config.delta * self.tv,
        ]
    }

    pub fn total(&self, config: &SolverConfig) -> f64 {
        self.weighted(config).iter().sum()
    }
}

/// Block outputs `A_τ x`, `T x`, `K_h x`, `∇x` (unscaled).
#[derive(Debug, Clone)]
pub(crate) struct Outputs<T> {
    pub a: Vec<T>,
    pub t: Vec<T>,
    pub k: Vec<T>,
    pub gr: Vec<T>,
    pub gc: Vec<T>,
}

/// Operators and data of one reconstruction problem.
pub(crate) struct Problem<'a, T> {
    pub op: SamplingOperator<T>,
    pub height: usize,
    pub width: usize,
    pub bins: usize,
    pub d: &'a [T],
    pub c: &'a [T],
    pub hist_target: Vec<T>,
    pub mode: NormMode,
}

impl<'a, T: Real> Problem<'a, T> {
    pub fn new(
        d: &'a SpadMeasurement<T>,
        c: &'a IntensityImage<T>,
        geometry: &FusionGeometry,
        mode: NormMode,
    ) -> Result<Self> {
        if d.height() != geometry.low_rows() || d.width() != geometry.low_cols() {
            return Err(mismatch(format!(
                "measurement is {}×{}, geometry expects {}×{}",
                d.height(),
                d.width(),
                geometry.low_rows(),
                geometry.low_cols()
            )));
        }
        if c.height() != geometry.high_rows() || c.width() != geometry.high_cols() {
            return Err(mismatch(format!(
                "intensity image is {}×{}, geometry expects {}×{}",
                c.height(),
                c.width(),
                geometry.high_rows(),
                geometry.high_cols()
            )));
        }
        Ok(Self {
            op: SamplingOperator::new(geometry),
            height: geometry.high_rows(),
            width: geometry.high_cols(),
            bins: d.bins(),
            d: d.as_slice(),
            c: c.as_slice(),
            hist_target: integrate_space(d.as_slice(), geometry.low_len()),
            mode,
        })
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width
    }

    pub fn len(&self) -> usize {
        self.frame_len() * self.bins
    }

    pub fn zero_outputs(&self) -> Outputs<T> {
        let lo = self.op.geometry().low_len();
        Outputs {
            a: vec![T::zero(); lo * self.bins],
            t: vec![T::zero(); self.frame_len()],
            k: vec![T::zero(); self.bins],
            gr: vec![T::zero(); self.len()],
            gc: vec![T::zero(); self.len()],
        }
    }

    pub fn forward(&self, x: &[T], out: &mut Outputs<T>) -> Result<()> {
        out.a = self.op.apply(x, self.bins)?;
        out.t = integrate_time_raw(x, self.frame_len());
        out.k = integrate_space(x, self.frame_len());
        gradient_into(x, self.height, self.width, &mut out.gr, &mut out.gc);
        Ok(())
    }

    fn l2(&self, v: &[T], target: &[T]) -> f64 {
        let sq: f64 = v
            .iter()
            .zip(target)
            .map(|(&a, &b)| {
                let r = a.as_f64() - b.as_f64();
                r * r
            })
            .sum();
        match self.mode {
            NormMode::Unsquared => sq.sqrt(),
            NormMode::Squared => sq,
        }
    }

    pub fn terms(&self, x: &[T], out: &Outputs<T>) -> ObjectiveTerms {
        let abs_sum = |v: &[T]| v.iter().map(|x| x.as_f64().abs()).sum::<f64>();
        ObjectiveTerms {
            data: self.l2(&out.a, self.d),
            ccd: self.l2(&out.t, self.c),
            histogram: self.l2(&out.k, &self.hist_target),
            l1: abs_sum(x),
            tv: abs_sum(&out.gr) + abs_sum(&out.gc),
        }
    }
}

/// Evaluates every term of the reconstruction objective at `i`.
pub fn objective<T: Real>(
    i: &TransientCube<T>,
    d: &SpadMeasurement<T>,
    c: &IntensityImage<T>,
    geometry: &FusionGeometry,
    config: &SolverConfig,
) -> Result<ObjectiveTerms> {
    if i.height() != geometry.high_rows() || i.width() != geometry.high_cols() || i.bins() != d.bins() {
        return Err(mismatch(format!(
            "cube is {}×{}×{}, expected {}×{}×{}",
            i.height(),
            i.width(),
            i.bins(),
            geometry.high_rows(),
            geometry.high_cols(),
            d.bins()
        )));
    }
    let problem = Problem::new(d, c, geometry, config.norm_mode)?;
    let mut out = problem.zero_outputs();
    problem.forward(i.as_slice(), &mut out)?;
    Ok(problem.terms(i.as_slice(), &out))
}
