//! Check routines shared by the integration tests and the acceptance target.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spadfusion_core::forward_model::{
    adjoint_a, adjoint_a_tau, apply_a, apply_a_tau, blur, blur_adjoint, downsample, downsample_adjoint,
    gradient_2d_adjoint, gradient_2d_raw, integrate_space, integrate_space_adjoint, integrate_time_adjoint,
    integrate_time_raw, mask,
};
use spadfusion_core::solver::reconstruct;
use spadfusion_core::{
    Boundary, Cube64, FusionGeometry, Image64, Measurement64, NormMode, SamplingOperator, SolverConfig,
};

use super::{DenseGeometry, DenseProblem, Pad};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rel_gap(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300)
}

pub fn random_geometry(rng: &mut ChaCha8Rng) -> FusionGeometry {
    let (lr, lc) = (rng.random_range(1..=4), rng.random_range(1..=4));
    let factor = rng.random_range(1..=5);
    let sigma = if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.3..2.5) };
    let boundary = if rng.random_bool(0.5) { Boundary::ZeroPad } else { Boundary::Replicate };
    let mut dead = BTreeSet::new();
    for r in 0..lr {
        for c in 0..lc {
            if rng.random_bool(0.1) {
                dead.insert((r, c));
            }
        }
    }
    FusionGeometry::new(lr, lc, factor, sigma)
        .unwrap()
        .with_active_width(rng.random_range(1..=factor))
        .unwrap()
        .with_boundary(boundary)
        .with_dead_pixels(dead)
        .unwrap()
}

/// Worst relative inner-product mismatch `|⟨Kx, y⟩ − ⟨x, Kᵀy⟩|` per operator pair.
pub fn adjoint_suite(trials: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = super::rng(seed);
    let mut worst: Vec<(&'static str, f64)> = [
        "blur",
        "mask",
        "downsample",
        "A",
        "A_tau",
        "sampling_operator",
        "integrate_time",
        "integrate_space",
        "gradient_2d",
    ]
    .into_iter()
    .map(|n| (n, 0.0))
    .collect();
    let mut record = |i: usize, lhs: f64, rhs: f64| worst[i].1 = worst[i].1.max(rel_gap(lhs, rhs));

    for _ in 0..trials {
        let g = random_geometry(&mut rng);
        let bins = rng.random_range(1..=4);
        let (hi, lo) = (g.high_len(), g.low_len());
        let x = super::random_vec(&mut rng, hi, -1.0, 1.0);
        let yh = super::random_vec(&mut rng, hi, -1.0, 1.0);
        let yl = super::random_vec(&mut rng, lo, -1.0, 1.0);

        record(0, dot(&blur(&x, &g).unwrap(), &yh), dot(&x, &blur_adjoint(&yh, &g).unwrap()));
        record(1, dot(&mask(&x, &g).unwrap(), &yh), dot(&x, &mask(&yh, &g).unwrap()));
        record(2, dot(&downsample(&x, &g).unwrap(), &yl), dot(&x, &downsample_adjoint(&yl, &g).unwrap()));
        record(3, dot(&apply_a(&x, &g).unwrap(), &yl), dot(&x, &adjoint_a(&yl, &g).unwrap()));

        // A_τ works on cubes; dead pixels in the measurement must read zero
        let xs = super::random_vec(&mut rng, hi * bins, 0.0, 1.0);
        let mut ys = super::random_vec(&mut rng, lo * bins, 0.0, 1.0);
        for b in 0..bins {
            for &(r, c) in g.dead_pixels() {
                ys[b * lo + r * g.low_cols() + c] = 0.0;
            }
        }
        let cube = Cube64::new(g.high_rows(), g.high_cols(), bins, 50.0, xs.clone()).unwrap();
        let meas =
            Measurement64::new(g.low_rows(), g.low_cols(), bins, 50.0, ys.clone(), g.dead_pixels().clone()).unwrap();
        let ax = apply_a_tau(&cube, &g).unwrap();
        let aty = adjoint_a_tau(&meas, &g).unwrap();
        record(4, dot(ax.as_slice(), &ys), dot(&xs, aty.as_slice()));

        let op = SamplingOperator::<f64>::new(&g);
        let xs = super::random_vec(&mut rng, hi * bins, -1.0, 1.0);
        let ys = super::random_vec(&mut rng, lo * bins, -1.0, 1.0);
        record(5, dot(&op.apply(&xs, bins).unwrap(), &ys), dot(&xs, &op.adjoint(&ys, bins).unwrap()));

        let img = super::random_vec(&mut rng, hi, -1.0, 1.0);
        record(6, dot(&integrate_time_raw(&xs, hi), &img), dot(&xs, &integrate_time_adjoint(&img, bins)));
        let hist = super::random_vec(&mut rng, bins, -1.0, 1.0);
        record(7, dot(&integrate_space(&xs, hi), &hist), dot(&xs, &integrate_space_adjoint(&hist, hi)));

        let (gr, gc) = gradient_2d_raw(&xs, g.high_rows(), g.high_cols());
        let pr = super::random_vec(&mut rng, hi * bins, -1.0, 1.0);
        let pc = super::random_vec(&mut rng, hi * bins, -1.0, 1.0);
        let back = gradient_2d_adjoint(&pr, &pc, g.high_rows(), g.high_cols());
        record(8, dot(&gr, &pr) + dot(&gc, &pc), dot(&xs, &back));
    }
    worst
}

pub const TINY_BINS: usize = 4;

/// 8×8 → 4×4, σ = 1, a = 1.
pub fn tiny_geometry() -> FusionGeometry {
    FusionGeometry::new(4, 4, 2, 1.0).unwrap().with_active_width(1).unwrap()
}

pub fn tiny_dense() -> DenseGeometry {
    DenseGeometry { low_rows: 4, low_cols: 4, r: 2, a: 1, sigma: 1.0, pad: Pad::Zero, dead: vec![] }
}

/// Max abs deviation of `apply_a_tau` from the dense `A_τ` on random tiny cubes.
pub fn dense_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = super::rng(seed);
    let dense = super::block_diag(&tiny_dense().a(), TINY_BINS);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x = super::random_vec(&mut rng, 64 * TINY_BINS, 0.0, 10.0);
        let cube = Cube64::new(8, 8, TINY_BINS, 100.0, x.clone()).unwrap();
        let ours = apply_a_tau(&cube, &tiny_geometry()).unwrap();
        let reference = super::matvec(&dense, &x);
        for (a, b) in ours.as_slice().iter().zip(&reference) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// A nonnegative truth on the tiny instance, its measurement and a perturbed CCD image.
pub fn tiny_instance(seed: u64) -> (Cube64, Measurement64, Image64) {
    let mut rng = super::rng(seed);
    let mut data = super::random_vec(&mut rng, 64 * TINY_BINS, 0.0, 1.0);
    for (i, v) in data.iter_mut().enumerate() {
        if (i / 8) % 8 < 3 {
            *v *= 4.0;
        }
    }
    let truth = Cube64::new(8, 8, TINY_BINS, 100.0, data).unwrap();
    let d = apply_a_tau(&truth, &tiny_geometry()).unwrap();
    let t = integrate_time_raw(truth.as_slice(), 64);
    let c: Vec<f64> = t.iter().map(|v| v * rng.random_range(0.9..1.1)).collect();
    (truth, d, Image64::new(8, 8, c).unwrap())
}

pub fn weights(config: &SolverConfig) -> [f64; 4] {
    [config.alpha, config.beta, config.gamma, config.delta]
}

pub struct Optimality {
    pub ours: f64,
    pub reference: f64,
    pub iterations: usize,
}

impl Optimality {
    pub fn gap(&self) -> f64 {
        (self.ours - self.reference) / self.reference
    }
}

/// Exit objective of `reconstruct` against the interior-point reference on the tiny instance.
pub fn solver_optimality(config: &SolverConfig, seed: u64) -> Optimality {
    let (_, d, c) = tiny_instance(seed);
    let squared = config.norm_mode == NormMode::Squared;
    let dense = DenseProblem::new(&tiny_dense(), TINY_BINS, d.as_slice().to_vec(), c.as_slice().to_vec());
    let reference = dense.reference_solve(weights(config), squared);
    let (cube, report) = reconstruct(&d, &c, &tiny_geometry(), config).unwrap();
    assert!(cube.as_slice().iter().all(|&v| v >= 0.0));
    Optimality {
        ours: dense.objective(cube.as_slice(), weights(config), squared),
        reference: dense.objective(&reference, weights(config), squared),
        iterations: report.iterations,
    }
}

pub struct MonteCarlo {
    pub mean_fit: f64,
    pub se_fit: f64,
    pub mean_rld: f64,
    pub se_rld: f64,
    pub clamped: usize,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Rapid lifetime determination from two contiguous windows of `k` bins starting at bin 0.
pub fn rld(trace: &[f64], k: usize, bin_ns: f64) -> f64 {
    let d0: f64 = trace[..k].iter().sum();
    let d1: f64 = trace[k..2 * k].iter().sum();
    k as f64 * bin_ns / (d0 / d1).ln()
}

/// Poisson decay traces (peak at bin 0), fitted by the library and by the RLD oracle.
pub fn lifetime_monte_carlo(traces: usize, lifetime: f64, counts: f64, seed: u64) -> MonteCarlo {
    use rand_distr::{Distribution, Poisson};
    use spadfusion_core::analysis::{fit_lifetimes, FitFlag, LifetimeFitConfig};

    let (bins, bin_ps) = (75, 160.0);
    let bin_ns = bin_ps / 1000.0;
    let shape: Vec<f64> = (0..bins).map(|b| (-(b as f64 + 0.5) * bin_ns / lifetime).exp()).collect();
    let norm: f64 = shape.iter().sum();
    let mean: Vec<f64> = shape.iter().map(|s| counts * s / norm).collect();

    let mut rng = super::rng(seed);
    let mut data = vec![0.0; traces * bins];
    let mut rld_values = Vec::with_capacity(traces);
    for p in 0..traces {
        let trace: Vec<f64> = mean.iter().map(|&m| Poisson::new(m).unwrap().sample(&mut rng)).collect();
        for (b, &v) in trace.iter().enumerate() {
            data[b * traces + p] = v;
        }
        rld_values.push(rld(&trace, 33, bin_ns));
    }
    let cube = Cube64::new(1, traces, bins, bin_ps, data).unwrap();
    let fit = fit_lifetimes(&cube, &LifetimeFitConfig::default()).unwrap();
    let fitted: Vec<f64> = fit.map.valid().collect();
    assert_eq!(fitted.len(), traces, "every trace has 1e4 counts and must be fitted");
    let (mean_fit, se_fit) = mean_se(&fitted);
    let (mean_rld, se_rld) = mean_se(&rld_values);
    MonteCarlo {
        mean_fit,
        se_fit,
        mean_rld,
        se_rld,
        clamped: fit.flags.iter().filter(|f| **f == FitFlag::Clamped).count(),
    }
}
