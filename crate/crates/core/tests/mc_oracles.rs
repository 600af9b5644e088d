mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

use mccs::linalg::nuclear_norm;
use mccs::mc_solver::{rank1_approx_ratio, svd_shrink, svt_complete, CompletionConfig, IncompleteMatrix};
use mccs::model::Seed;

// Large τ makes the SVT fixed point approach the minimum nuclear norm
// completion; the gap shrinks like 1/τ.
// Larger τ also needs more iterations, so each instance picks its own.
fn oracle_config(tau: f64, delta: f64) -> CompletionConfig {
    CompletionConfig { tau: Some(tau), delta: Some(delta), tol: 1e-12, max_iter: 200_000, noise_radius_rel: None }
}

#[test]
fn two_by_two_matches_grid_search() {
    // Observed (0,0)=1, (0,1)=2, (1,0)=2; the free entry t is chosen by a
    // grid search over closed-form 2×2 nuclear norms.
    let nuclear = |t: f64| {
        let (a, b) = singular_values_2x2([[1.0, 2.0], [2.0, t]]);
        a + b
    };
    let oracle = grid_argmin(-10.0, 10.0, 1e-4, nuclear);
    assert!((oracle - 1.0).abs() < 1e-3, "grid oracle {oracle}");
    assert!(nuclear(4.0) > nuclear(oracle), "rank-1 closure is not the minimizer");

    let observed = IncompleteMatrix::new(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0)]).unwrap();
    let (x, report) = svt_complete(&observed, &oracle_config(1e5, 1.0)).unwrap();
    let t = x.as_matrix()[(1, 1)];
    assert!((t - oracle).abs() < 1e-3, "svt {t} vs oracle {oracle} ({report:?})");
}

#[test]
fn three_by_three_matches_grid_search() {
    // A rank-2 matrix with one hidden entry.
    let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, 1.0, 3.0, -2.0, 3.0, 2.0, -1.5]);
    let (hi, hj) = (2, 1);
    let with = |t: f64| {
        let mut z = m.clone();
        z[(hi, hj)] = t;
        z
    };
    let coarse = grid_argmin(-20.0, 20.0, 1e-2, |t| reference_nuclear_norm(&with(t)));
    let oracle = grid_argmin(coarse - 0.05, coarse + 0.05, 1e-5, |t| reference_nuclear_norm(&with(t)));
    let omega = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|&p| p != (hi, hj));
    let observed = IncompleteMatrix::from_dense(&m, omega).unwrap();
    let (x, _) = svt_complete(&observed, &oracle_config(1e3, 1.5)).unwrap();
    assert!((x.as_matrix()[(hi, hj)] - oracle).abs() < 1e-3, "svt {} vs oracle {oracle}", x.as_matrix()[(hi, hj)]);
}

#[test]
fn nuclear_norm_is_not_inflated() {
    let observed = IncompleteMatrix::new(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0)]).unwrap();
    let (x, _) = svt_complete(&observed, &oracle_config(1e5, 1.0)).unwrap();
    let ours = nuclear_norm(x.as_matrix()).unwrap();
    for k in -40..=40 {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, k as f64 * 0.25]);
        let zn = reference_nuclear_norm(&z);
        assert!(ours <= zn + 1e-3 * zn, "t = {}: {ours} > {zn}", k as f64 * 0.25);
    }
}

#[test]
fn full_observation_is_reproduced() {
    let m = gaussian_matrix(Seed(3), 6, 9);
    let omega = (0..6).flat_map(|i| (0..9).map(move |j| (i, j)));
    let observed = IncompleteMatrix::from_dense(&m, omega).unwrap();
    let config = CompletionConfig::default();
    let (x, report) = svt_complete(&observed, &config).unwrap();
    assert!(report.converged);
    assert!((x.as_matrix() - &m).norm() <= config.tol * m.norm());
}

#[test]
fn converged_completion_keeps_observed_entries() {
    let u = gaussian_matrix(Seed(5), 30, 2);
    let v = gaussian_matrix(Seed(6), 2, 80);
    let m = u * v;
    let observed = IncompleteMatrix::from_dense(&m, uniform_omega(Seed(7), 30, 80, 0.5)).unwrap();
    let config = CompletionConfig::default();
    let (x, report) = svt_complete(&observed, &config).unwrap();
    assert!(report.converged, "{report:?}");
    assert!(observed.relative_residual(x.as_matrix()) <= config.tol);
}

#[test]
fn rank1_ratio_of_identity() {
    let r = rank1_approx_ratio(&DMatrix::identity(3, 3)).unwrap();
    assert!((r - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert!(rank1_approx_ratio(&DMatrix::zeros(2, 2)).is_err());
}

#[test]
fn shrink_limits() {
    let m = gaussian_matrix(Seed(9), 5, 7);
    assert!((svd_shrink(&m, 0.0).unwrap() - &m).norm() < 1e-10);
    let top = m.clone().svd(false, false).singular_values.max();
    assert!(svd_shrink(&m, top * (1.0 + 1e-9)).unwrap().norm() == 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shrink_is_non_expansive(seed in any::<u64>(), rows in 1usize..8, cols in 1usize..8, tau in 0.0f64..3.0) {
        let a = gaussian_matrix(Seed(seed), rows, cols);
        let b = gaussian_matrix(Seed(seed).derive(1), rows, cols);
        let lhs = (svd_shrink(&a, tau).unwrap() - svd_shrink(&b, tau).unwrap()).norm();
        prop_assert!(lhs <= (&a - &b).norm() * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), rows in 1usize..47, cols in 1usize..60) {
        let a = gaussian_matrix(Seed(seed), rows, cols);
        let d = mccs::linalg::svd(&a).unwrap();
        prop_assert!((d.reconstruct() - &a).norm() <= 1e-9 * a.norm());
    }
}
