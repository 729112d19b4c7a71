mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;
use spadfusion_core::forward_model::{apply_a_tau, blur, default_active_width, integrate_space_high, SamplingOperator};
use spadfusion_core::{Boundary, Cube64, FusionGeometry};
use support::checks::{adjoint_suite, dense_oracle_error, random_geometry};
use support::{DenseGeometry, Pad};

#[test]
fn adjoint_identities_hold() {
    for (name, worst) in adjoint_suite(100, 7) {
        assert!(worst < 1e-5, "{name}: relative inner-product mismatch {worst:e}");
    }
}

#[test]
fn tiny_instance_matches_dense_matrix() {
    let err = dense_oracle_error(20, 3);
    assert!(err < 1e-5, "max abs error {err:e}");
}

#[test]
fn random_geometries_match_dense_matrices() {
    let mut rng = support::rng(99);
    for _ in 0..40 {
        let g = random_geometry(&mut rng);
        let dense = DenseGeometry {
            low_rows: g.low_rows(),
            low_cols: g.low_cols(),
            r: g.factor(),
            a: g.active_width(),
            sigma: g.blur_sigma(),
            pad: match g.boundary() {
                Boundary::ZeroPad => Pad::Zero,
                Boundary::Replicate => Pad::Replicate,
            },
            dead: g.dead_pixels().iter().copied().collect(),
        }
        .a();
        let x = support::random_vec(&mut rng, g.high_len(), 0.0, 5.0);
        let ours = SamplingOperator::<f64>::new(&g).apply(&x, 1).unwrap();
        for (a, b) in ours.iter().zip(support::matvec(&dense, &x)) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b} for {g:?}");
        }
    }
}

#[test]
fn blur_conserves_mass_away_from_edges() {
    let g = FusionGeometry::new(5, 5, 5, 1.5).unwrap();
    let mut frame = vec![0.0f64; 625];
    frame[12 * 25 + 12] = 3.0;
    let out = blur(&frame, &g).unwrap();
    assert!((out.iter().sum::<f64>() - 3.0).abs() < 1e-12);
}

#[test]
fn replicate_blur_conserves_constant_frames() {
    let g = FusionGeometry::new(2, 3, 4, 2.0).unwrap().with_boundary(Boundary::Replicate);
    let out = blur(&vec![2.5f64; g.high_len()], &g).unwrap();
    assert!(out.iter().all(|v| (v - 2.5).abs() < 1e-12));
}

#[test]
fn unblurred_full_window_conserves_counts_per_bin() {
    let g = FusionGeometry::new(3, 2, 4, 0.0).unwrap().with_active_width(4).unwrap();
    let mut rng = support::rng(5);
    let cube = Cube64::new(12, 8, 3, 10.0, support::random_vec(&mut rng, 12 * 8 * 3, 0.0, 1.0)).unwrap();
    let meas = apply_a_tau(&cube, &g).unwrap();
    let low = spadfusion_core::forward_model::integrate_space_low(&meas);
    for (a, b) in integrate_space_high(&cube).iter().zip(low) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn dead_pixels_read_zero_in_every_bin() {
    let dead: BTreeSet<_> = [(0, 1), (2, 2)].into_iter().collect();
    let g = FusionGeometry::new(3, 3, 3, 1.0).unwrap().with_dead_pixels(dead.clone()).unwrap();
    let cube = Cube64::new(9, 9, 5, 10.0, vec![1.0; 405]).unwrap();
    let meas = apply_a_tau(&cube, &g).unwrap();
    assert_eq!(meas.dead_pixels(), &dead);
    for &(r, c) in &dead {
        assert!((0..5).all(|b| meas.cube().get(r, c, b) == 0.0));
    }
    assert!(meas.cube().get(1, 1, 0) > 0.0);
}

#[test]
fn default_active_width_follows_area_ratio() {
    assert_eq!(default_active_width(1), 1);
    assert_eq!(default_active_width(12), 2);
    assert_eq!(default_active_width(50), 7);
    assert_eq!(default_active_width(4), 1);
}

proptest! {
    #[test]
    fn a_tau_is_linear(
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let mut rng = support::rng(seed);
        let g = random_geometry(&mut rng);
        let op = SamplingOperator::<f64>::new(&g);
        let bins = 3;
        let x = support::random_vec(&mut rng, g.high_len() * bins, -1.0, 1.0);
        let y = support::random_vec(&mut rng, g.high_len() * bins, -1.0, 1.0);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let lhs = op.apply(&combo, bins).unwrap();
        let ax = op.apply(&x, bins).unwrap();
        let ay = op.apply(&y, bins).unwrap();
        for ((l, u), v) in lhs.iter().zip(ax).zip(ay) {
            prop_assert!((l - (a * u + b * v)).abs() < 1e-9);
        }
    }

    #[test]
    fn a_tau_preserves_nonnegativity(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let g = random_geometry(&mut rng);
        let x = support::random_vec(&mut rng, g.high_len() * 2, 0.0, 1.0);
        let out = SamplingOperator::<f64>::new(&g).apply(&x, 2).unwrap();
        prop_assert!(out.iter().all(|&v| v >= 0.0));
    }
}
