mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rkpca_core::baselines::{pca_best_rank, pca_denoise, solve_rpca, svt, RpcaConfig};
use rkpca_core::linalg::svd;
use rkpca_core::solvers::SolverKind;
use rkpca_core::synth::{relative_error, rng_from_seed};
use rkpca_core::DataMatrix;

fn nuclear_prox_value(x: &DataMatrix, a: &DataMatrix, tau: f64) -> f64 {
    0.5 * (x - a).frobenius_norm_sq() + tau * na_singular_values(x).iter().sum::<f64>()
}

/// Rank-2 Gaussian low-rank part plus 5% sparse corruption of magnitude up to 5.
fn low_rank_plus_sparse(n: usize, seed: u64) -> (DataMatrix, DataMatrix) {
    let u = normal_matrix(n, 2, seed);
    let v = normal_matrix(2, n, seed ^ 0xabc);
    let l = u.matmul(&v);
    let mut rng = rng_from_seed(seed ^ 0xdef);
    let mut m = l.clone();
    let count = n * n / 20;
    for k in rand::seq::index::sample(&mut rng, n * n, count) {
        m.as_mut_slice()[k] += rng.random_range(-5.0..5.0);
    }
    (l, m)
}

#[test]
fn pca_examples() {
    let m = normal_matrix(6, 9, 1);
    assert!((&pca_denoise(&m, 6).unwrap() - &m).max_abs() < 1e-10);
    assert!(pca_denoise(&m, 0).is_err());
    assert!(pca_denoise(&m, 7).is_err());

    let low = normal_matrix(6, 2, 2).matmul(&normal_matrix(2, 9, 3));
    assert!((&pca_denoise(&low, 2).unwrap() - &low).max_abs() < 1e-10);

    let s = na_singular_values(&m);
    let tail: f64 = s[3..].iter().map(|v| v * v).sum::<f64>().sqrt();
    let err = (&pca_denoise(&m, 3).unwrap() - &m).frobenius_norm();
    assert!(rel_close(err, tail, 1e-10), "{err} vs {tail}");
}

#[test]
fn best_rank_pca_picks_the_oracle_rank() {
    let clean = normal_matrix(8, 3, 4).matmul(&normal_matrix(3, 20, 5));
    let noisy = &clean + &(&normal_matrix(8, 20, 6) * 0.01);
    let (r, approx) = pca_best_rank(&noisy, &clean).unwrap();
    assert_eq!(r, 3);
    for k in 1..=8 {
        let e = relative_error(&clean, &pca_denoise(&noisy, k).unwrap()).unwrap();
        assert!(relative_error(&clean, &approx).unwrap() <= e + 1e-15);
    }
}

#[test]
fn svt_examples() {
    let a = normal_matrix(5, 4, 7);
    assert!((&svt(&a, 0.0).unwrap() - &a).max_abs() < 1e-12);
    let big = na_singular_values(&a)[0];
    assert!(svt(&a, big).unwrap().max_abs() < 1e-12);
    let d = svt(&DataMatrix::from_diag(&[3.0, 1.0]), 2.0).unwrap();
    assert!((&d - &DataMatrix::from_diag(&[1.0, 0.0])).max_abs() < 1e-14);
    assert!(svt(&a, -1.0).is_err());
}

#[test]
fn svt_beats_random_perturbations() {
    let mut rng = rng_from_seed(99);
    for instance in 0..10 {
        let a = normal_matrix(5, 6, 700 + instance);
        let tau = rng.random_range(0.0..2.0);
        let best = svt(&a, tau).unwrap();
        let value = nuclear_prox_value(&best, &a, tau);
        for _ in 0..1000 {
            let scale: f64 = rng.random_range(1e-4..1.0);
            let mut probe = best.clone();
            for p in probe.as_mut_slice() {
                *p += scale * rng.random_range(-1.0..1.0);
            }
            assert!(value <= nuclear_prox_value(&probe, &a, tau) + 1e-10);
        }
    }
}

#[test]
fn rpca_recovers_low_rank_plus_sparse() {
    let (l, m) = low_rank_plus_sparse(50, 12);
    let r = solve_rpca(&m, &RpcaConfig::default()).unwrap();
    assert_eq!(r.solver, SolverKind::Rpca);
    assert!(r.converged);
    let err = relative_error(&l, &r.x).unwrap();
    assert!(err < 1e-4, "{err:e}");
    assert!(r.residual < 1e-6);
}

#[test]
fn rpca_leaves_clean_rank_one_alone() {
    let u = DataMatrix::from_rows(&[&[1.0], &[-1.2], &[0.9], &[1.1], &[-0.8]]);
    let v = DataMatrix::from_rows(&[&[1.0, 0.9, -1.1, 1.0, -0.95, 1.05]]);
    let m = u.matmul(&v);
    let r = solve_rpca(&m, &RpcaConfig::default()).unwrap();
    assert!(r.e.l1_norm() / m.l1_norm() < 1e-4);
}

#[test]
fn rpca_config_and_exhaustion() {
    assert!(RpcaConfig { rho_growth: 1.0, ..Default::default() }.validate().is_err());
    assert!(RpcaConfig { lambda: Some(0.0), ..Default::default() }.validate().is_err());
    let m = normal_matrix(10, 12, 3);
    assert!((RpcaConfig::default().resolved_lambda(&m) - 1.0 / 12f64.sqrt()).abs() < 1e-15);
    let r = solve_rpca(&m, &RpcaConfig { t_max: 2, ..Default::default() }).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 2);
}

proptest! {
    #![proptest_config(prop_config(48))]

    #[test]
    fn pca_output_has_at_most_rank_r(d in 2usize..9, n in 2usize..9, seed in any::<u64>(), pick in 0usize..8) {
        let m = normal_matrix(d, n, seed);
        let r = 1 + pick % d.min(n);
        let s = svd(&pca_denoise(&m, r).unwrap()).unwrap().s;
        if r < s.len() {
            prop_assert!(s[r] < 1e-10 * s[0]);
        }
    }
}
