//! Primal-dual hybrid gradient solve.
//!
//! Each operator block `K_j` is rescaled by `s_j ≈ 1/‖K_j‖` so that the
//! blocks contribute comparably to the stacked norm; the conjugate proxes
//! absorb the scale (`w‖K x − b‖ = (w/s)‖s K x − s b‖`). The iteration keeps
//! `L x_k` around so that `L x̄ = 2 L x_{k+1} − L x_k` costs no extra
//! operator application, and the objective of every iterate comes for free.

use std::time::{Duration, Instant};

use crate::datacube::{IntensityImage, SpadMeasurement, TransientCube};
use crate::error::{Error, Result};
use crate::forward_model::{
    gradient_adjoint_into, integrate_space_adjoint, integrate_time_adjoint, FusionGeometry, SamplingOperator,
};
use crate::scalar::{norm2, Real};

use super::config::{NormMode, SolverConfig};
use super::objective::{ObjectiveTerms, Outputs, Problem};
use super::power::power_iteration;

const POWER_ITERS: usize = 30;
const POWER_TOL: f64 = 1e-4;
/// Margin on the power-iteration estimate, which approaches `‖L‖` from below.
const NORM_MARGIN: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Weighted objective of the returned cube.
    pub objective: f64,
    pub terms: ObjectiveTerms,
    pub initial_objective: f64,
    /// Relative change of the primal iterate at exit.
    pub rel_change: f64,
    /// Estimated norm of the rescaled stacked operator.
    pub operator_norm: f64,
    pub primal_step: f64,
    pub dual_step: f64,
    pub wall_time: Duration,
    /// Objective after every iteration when `record_trace` is set.
    pub trace: Vec<f64>,
}

/// `A_τᵀ d` rescaled so that `sum(A_τ i₀) = sum(d)`.
pub fn initial_estimate<T: Real>(d: &SpadMeasurement<T>, geometry: &FusionGeometry) -> Result<Vec<T>> {
    let op = SamplingOperator::new(geometry);
    let back = op.adjoint(d.as_slice(), d.bins())?;
    let projected: f64 = op.apply(&back, d.bins())?.iter().map(|v| v.as_f64()).sum();
    if !(projected > 0.0) {
        return Ok(vec![T::zero(); back.len()]);
    }
    let k = T::of(d.sum() / projected);
    Ok(back.into_iter().map(|v| (v * k).max(T::zero())).collect())
}

#[derive(Clone, Copy)]
struct Block<T> {
    active: bool,
    scale: T,
    weight: f64,
}

struct Blocks<T> {
    a: Block<T>,
    t: Block<T>,
    k: Block<T>,
    g: Block<T>,
}

fn axpy_into<T: Real>(out: &mut [T], scale: T, v: &[T]) {
    for (o, &x) in out.iter_mut().zip(v) {
        *o += scale * x;
    }
}

impl<'a, T: Real> Problem<'a, T> {
    /// `Σ_j s_j K_jᵀ y_j` over the active blocks.
    fn adjoint(&self, blocks: &Blocks<T>, y: &Outputs<T>, out: &mut [T]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = T::zero());
        let n = self.frame_len();
        if blocks.a.active {
            let back = self.op.adjoint(&y.a, self.bins)?;
            axpy_into(out, blocks.a.scale, &back);
        }
        if blocks.t.active {
            axpy_into(out, blocks.t.scale, &integrate_time_adjoint(&y.t, self.bins));
        }
        if blocks.k.active {
            axpy_into(out, blocks.k.scale, &integrate_space_adjoint(&y.k, n));
        }
        if blocks.g.active {
            let mut back = vec![T::zero(); out.len()];
            gradient_adjoint_into(&y.gr, &y.gc, self.height, self.width, &mut back);
            axpy_into(out, blocks.g.scale, &back);
        }
        Ok(())
    }

    fn blocks(&self, config: &SolverConfig) -> Result<Blocks<T>> {
        let (hi, lo) = (self.frame_len(), self.op.geometry().low_len());
        let norm_a = power_iteration::<T>(hi, POWER_ITERS, POWER_TOL, |v| {
            let mut low = vec![T::zero(); lo];
            self.op.apply_frame(v, &mut low);
            let mut back = vec![T::zero(); hi];
            self.op.adjoint_frame(&low, &mut back);
            back
        });
        if !(norm_a > 0.0) {
            return Err(Error::Numerical("forward operator norm is zero; nothing is observed".into()));
        }
        let block = |active: bool, norm: f64, weight: f64| Block { active, scale: T::of(1.0 / norm), weight };
        Ok(Blocks {
            a: block(true, norm_a, 1.0),
            t: block(config.alpha > 0.0, (self.bins as f64).sqrt(), config.alpha),
            k: block(config.beta > 0.0, (hi as f64).sqrt(), config.beta),
            g: block(config.delta > 0.0, 8f64.sqrt(), config.delta),
        })
    }
}

/// Conjugate prox of `w‖z − b‖` (or `w‖z − b‖²`) for the rescaled block.
fn prox_l2<T: Real>(y: &mut [T], bar: &[T], target: &[T], block: Block<T>, sigma: T, mode: NormMode) {
    let s = block.scale;
    for ((yv, &bv), &t) in y.iter_mut().zip(bar).zip(target) {
        *yv += sigma * s * (bv - t);
    }
    let s = s.as_f64();
    match mode {
        NormMode::Unsquared => {
            let radius = block.weight / s;
            let n = norm2(y);
            if n > radius {
                let k = T::of(radius / n);
                y.iter_mut().for_each(|v| *v *= k);
            }
        }
        NormMode::Squared => {
            let lambda = block.weight / (s * s);
            let k = T::of(1.0 / (1.0 + sigma.as_f64() / (2.0 * lambda)));
            y.iter_mut().for_each(|v| *v *= k);
        }
    }
}

/// Conjugate prox of `w‖z‖₁`: clip to `[−w/s, w/s]`.
fn prox_l1<T: Real>(y: &mut [T], bar: &[T], block: Block<T>, sigma: T) {
    let bound = T::of(block.weight / block.scale.as_f64());
    for (yv, &bv) in y.iter_mut().zip(bar) {
        *yv = (*yv + sigma * block.scale * bv).max(-bound).min(bound);
    }
}

/// Reconstructs the high-resolution cube from `d` and `c`.
///
/// Returns the iterate with the lowest objective seen (the initializer
/// included). `converged` is false when `max_iters` ran out first.
pub fn reconstruct<T: Real>(
    d: &SpadMeasurement<T>,
    c: &IntensityImage<T>,
    geometry: &FusionGeometry,
    config: &SolverConfig,
) -> Result<(TransientCube<T>, SolveReport)> {
    config.validate()?;
    let start = Instant::now();
    let problem = Problem::new(d, c, geometry, config.norm_mode)?;
    let blocks = problem.blocks(config)?;
    let n = problem.len();

    let stacked = power_iteration::<T>(n, POWER_ITERS, POWER_TOL, |v| {
        let mut out = problem.zero_outputs();
        // forward is infallible for correctly sized inputs
        problem.forward(v, &mut out).expect("sized by problem");
        let mut back = vec![T::zero(); n];
        problem.adjoint(&blocks, &scale_outputs(&out, &blocks), &mut back).expect("sized by problem");
        back
    });
    if !(stacked > 0.0 && stacked.is_finite()) {
        return Err(Error::Numerical(format!("stacked operator norm estimate is {stacked}")));
    }
    let norm = NORM_MARGIN * stacked;
    let tau = T::of(config.step_ratio / norm);
    let sigma = T::of(1.0 / (config.step_ratio * norm));
    let gamma_step = tau * T::of(config.gamma);

    let mut x = initial_estimate(d, geometry)?;
    let mut cur = problem.zero_outputs();
    problem.forward(&x, &mut cur)?;
    let initial_terms = problem.terms(&x, &cur);
    let initial_objective = initial_terms.total(config);
    if !initial_objective.is_finite() {
        return Err(Error::Numerical("objective at the initializer is not finite".into()));
    }

    let mut best = (initial_objective, initial_terms, x.clone());
    let mut bar = cur.clone();
    let mut y = problem.zero_outputs();
    let mut next = problem.zero_outputs();
    let mut grad = vec![T::zero(); n];
    let mut trace = Vec::new();
    let mut rel_change = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let two = T::of(2.0);

    while iterations < config.max_iters {
        iterations += 1;
        prox_l2(&mut y.a, &bar.a, problem.d, blocks.a, sigma, config.norm_mode);
        if blocks.t.active {
            prox_l2(&mut y.t, &bar.t, problem.c, blocks.t, sigma, config.norm_mode);
        }
        if blocks.k.active {
            prox_l2(&mut y.k, &bar.k, &problem.hist_target, blocks.k, sigma, config.norm_mode);
        }
        if blocks.g.active {
            prox_l1(&mut y.gr, &bar.gr, blocks.g, sigma);
            prox_l1(&mut y.gc, &bar.gc, blocks.g, sigma);
        }

        problem.adjoint(&blocks, &y, &mut grad)?;
        let mut diff_sq = 0.0f64;
        let mut norm_sq = 0.0f64;
        for (xv, &g) in x.iter_mut().zip(&grad) {
            let updated = (*xv - tau * g - gamma_step).max(T::zero());
            let delta = (updated - *xv).as_f64();
            diff_sq += delta * delta;
            norm_sq += updated.as_f64() * updated.as_f64();
            *xv = updated;
        }
        rel_change = diff_sq.sqrt() / norm_sq.sqrt().max(f64::MIN_POSITIVE);

        problem.forward(&x, &mut next)?;
        extrapolate(&mut bar, &next, &cur, two);
        std::mem::swap(&mut cur, &mut next);

        let terms = problem.terms(&x, &cur);
        let total = terms.total(config);
        if !total.is_finite() {
            return Err(Error::Numerical(format!(
                "objective became {total} at iteration {iterations} (primal step {}, dual step {})",
                tau, sigma
            )));
        }
        if config.record_trace {
            trace.push(total);
        }
        if total < best.0 {
            best = (total, terms, x.clone());
        }
        if rel_change < config.tol {
            converged = true;
            break;
        }
    }

    let (objective, terms, data) = best;
    let cube = TransientCube::new(problem.height, problem.width, problem.bins, d.bin_width_ps(), data)?;
    let report = SolveReport {
        iterations,
        converged,
        objective,
        terms,
        initial_objective,
        rel_change,
        operator_norm: stacked,
        primal_step: tau.as_f64(),
        dual_step: sigma.as_f64(),
        wall_time: start.elapsed(),
        trace,
    };
    Ok((cube, report))
}

fn scale_outputs<T: Real>(out: &Outputs<T>, blocks: &Blocks<T>) -> Outputs<T> {
    let scaled = |v: &[T], s: T| v.iter().map(|&x| x * s).collect::<Vec<T>>();
    Outputs {
        a: scaled(&out.a, blocks.a.scale),
        t: scaled(&out.t, blocks.t.scale),
        k: scaled(&out.k, blocks.k.scale),
        gr: scaled(&out.gr, blocks.g.scale),
        gc: scaled(&out.gc, blocks.g.scale),
    }
}

/// `bar = 2·next − cur`, blockwise.
fn extrapolate<T: Real>(bar: &mut Outputs<T>, next: &Outputs<T>, cur: &Outputs<T>, two: T) {
    let pairs = [
        (&mut bar.a, &next.a, &cur.a),
        (&mut bar.t, &next.t, &cur.t),
        (&mut bar.k, &next.k, &cur.k),
        (&mut bar.gr, &next.gr, &cur.gr),
        (&mut bar.gc, &next.gc, &cur.gc),
    ];
    for (b, nx, cu) in pairs {
        for ((bv, &nv), &cv) in b.iter_mut().zip(nx.iter()).zip(cu.iter()) {
            *bv = two * nv - cv;
        }
    }
}
