mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rkpca_core::linalg::{psd_power, spectral_norm, svd, sym_eig, truncated_eig};
use rkpca_core::{DataMatrix, Error};

fn max_abs_diff(a: &DataMatrix, b: &DataMatrix) -> f64 {
    (a - b).max_abs()
}

fn orthonormality_error(v: &DataMatrix) -> f64 {
    max_abs_diff(&v.t_matmul(v), &DataMatrix::identity(v.cols()))
}

#[test]
fn identity_and_diagonal_eigenpairs() {
    let eig = sym_eig(&DataMatrix::identity(3)).unwrap();
    assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    assert!(orthonormality_error(&eig.vectors) < 1e-12);

    let eig = sym_eig(&DataMatrix::from_diag(&[1.0, 4.0])).unwrap();
    assert_eq!(eig.values, vec![4.0, 1.0]);
    assert!((eig.vectors[(1, 0)].abs() - 1.0).abs() < 1e-12);
    assert!((eig.vectors[(0, 1)].abs() - 1.0).abs() < 1e-12);
}

#[test]
fn eigenvalues_of_q_lambda_qt_are_recovered() {
    let g = to_na(&normal_matrix(10, 10, 3));
    let q = g.qr().q();
    let lambda: Vec<f64> = (0..10).map(|i| 5.0 - 1.1 * i as f64).collect();
    let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda.clone())) * q.transpose();
    let mut a = from_na(&a);
    a.symmetrize();

    let eig = sym_eig(&a).unwrap();
    for (got, want) in eig.values.iter().zip(&lambda) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
    let scale = a.frobenius_norm();
    assert!(max_abs_diff(&eig.reconstruct(), &a) < 1e-8 * scale);
    assert!(orthonormality_error(&eig.vectors) < 1e-8);
}

#[test]
fn eigenvalues_match_nalgebra() {
    for seed in 0..5 {
        let a = random_symmetric(15, seed);
        let ours = sym_eig(&a).unwrap().values;
        let theirs = na_eigenvalues(&a);
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-9, "seed {seed}: {x} vs {y}");
        }
    }
}

#[test]
fn rejects_bad_input() {
    let mut a = DataMatrix::identity(2);
    a[(0, 1)] = f64::NAN;
    a[(1, 0)] = f64::NAN;
    assert!(matches!(sym_eig(&a), Err(Error::InvalidInput(_))));
    assert!(matches!(psd_power(&DataMatrix::identity(2), -0.5, 0.0), Err(Error::InvalidInput(_))));
    let singular = DataMatrix::from_diag(&[1.0, 0.0]);
    assert!(matches!(psd_power(&singular, -0.5, 0.0), Err(Error::InvalidInput(_))));
}

#[test]
fn power_examples() {
    let r = psd_power(&DataMatrix::from_diag(&[4.0, 9.0]), 0.5, 0.0).unwrap();
    assert!(max_abs_diff(&r, &DataMatrix::from_diag(&[2.0, 3.0])) < 1e-14);
    let r = psd_power(&DataMatrix::identity(4), -0.5, 1e-12).unwrap();
    assert!(max_abs_diff(&r, &DataMatrix::identity(4)) < 1e-14);
}

#[test]
fn gram_root_trace_is_sum_of_singular_values() {
    let g = normal_matrix(5, 8, 11);
    let mut k = g.t_matmul(&g);
    k.symmetrize();
    let root = psd_power(&k, 0.5, 0.0).unwrap();
    let want: f64 = na_singular_values(&g).iter().sum();
    // The three zero eigenvalues of K come back as ±1e-16 and their square
    // roots contribute about 1e-8 each.
    assert!(rel_close(root.trace(), want, 1e-7), "{} vs {want}", root.trace());
}

#[test]
fn spectral_norm_examples() {
    assert_eq!(spectral_norm(&DataMatrix::from_diag(&[3.0, -5.0])).unwrap(), 5.0);
    assert_eq!(spectral_norm(&DataMatrix::zeros(3, 3)).unwrap(), 0.0);
    for seed in 0..5 {
        let a = normal_matrix(6, 6, 100 + seed);
        let ours = spectral_norm(&a).unwrap();
        let oracle = power_iteration_norm(&a, 5000);
        assert!(rel_close(ours, oracle, 1e-6), "{ours} vs {oracle}");
        assert!(rel_close(ours, na_singular_values(&a)[0], 1e-10));
    }
}

#[test]
fn truncated_eig_examples() {
    let a = DataMatrix::from_diag(&[5.0, 3.0, 1.0]);
    let (_, s) = truncated_eig(&a, 2).unwrap();
    assert_eq!(s, vec![5.0, 3.0]);
    assert!(truncated_eig(&a, 4).is_err());
    assert!(truncated_eig(&a, 0).is_err());

    let full = sym_eig(&a).unwrap();
    let (v, s) = truncated_eig(&a, 3).unwrap();
    assert_eq!(s, full.values);
    assert_eq!(v, full.vectors);

    let k = random_psd(9, 2, 5);
    let (v, s) = truncated_eig(&k, 2).unwrap();
    let rebuilt = v.matmul(&DataMatrix::from_diag(&s)).matmul(&v.transpose());
    assert!(max_abs_diff(&rebuilt, &k) < 1e-8 * k.frobenius_norm());
}

#[test]
fn svd_matches_nalgebra_and_reconstructs() {
    for (rows, cols) in [(7, 4), (4, 7), (6, 6), (1, 5)] {
        let a = normal_matrix(rows, cols, (rows * 10 + cols) as u64);
        let s = svd(&a).unwrap();
        for (x, y) in s.s.iter().zip(na_singular_values(&a)) {
            assert!((x - y).abs() < 1e-10, "{rows}x{cols}: {x} vs {y}");
        }
        assert!(max_abs_diff(&s.recompose(|_, v| v), &a) < 1e-10);
    }
}

#[test]
fn svd_of_rank_deficient_input() {
    let u = DataMatrix::from_rows(&[&[1.0], &[2.0], &[-1.0], &[0.5]]);
    let v = DataMatrix::from_rows(&[&[3.0, -1.0, 2.0]]);
    let a = u.matmul(&v);
    let s = svd(&a).unwrap();
    assert!(rel_close(s.s[0], na_singular_values(&a)[0], 1e-12));
    assert!(s.s[1] < 1e-12 && s.s[2] < 1e-12);
    assert!(max_abs_diff(&s.recompose(|_, v| v), &a) < 1e-12);
}

proptest! {
    #![proptest_config(prop_config(48))]

    #[test]
    fn root_trace_is_sum_of_root_eigenvalues(n in 2usize..12, k in 1usize..12, seed in any::<u64>()) {
        let a = random_psd(n, k, seed);
        let root = psd_power(&a, 0.5, 0.0).unwrap();
        let own: f64 = sym_eig(&a).unwrap().values.iter().map(|v| v.max(0.0).sqrt()).sum();
        prop_assert!((root.trace() - own).abs() <= 1e-10 * own.max(1.0));
        prop_assert!(root.trace() * root.trace() >= a.trace() * (1.0 - 1e-9));
        if k >= n + 2 {
            let oracle: f64 = na_eigenvalues(&a).iter().map(|v| v.max(0.0).sqrt()).sum();
            prop_assert!((root.trace() - oracle).abs() <= 1e-8 * oracle.max(1.0));
        }
    }

    #[test]
    fn square_of_root_is_identity_map(n in 2usize..10, seed in any::<u64>()) {
        let mut a = random_psd(n, n + 3, seed);
        for i in 0..n {
            a[(i, i)] += 0.1;
        }
        let root = psd_power(&a, 0.5, 1e-3).unwrap();
        let back = psd_power(&root, 2.0, 0.0).unwrap();
        prop_assert!(max_abs_diff(&back, &a) <= 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn spectral_norm_triangle_inequality(n in 1usize..9, s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = normal_matrix(n, n, s1);
        let b = normal_matrix(n, n, s2);
        let lhs = spectral_norm(&(&a + &b)).unwrap();
        let rhs = spectral_norm(&a).unwrap() + spectral_norm(&b).unwrap();
        prop_assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn eigen_reconstruction(n in 1usize..14, seed in any::<u64>()) {
        let a = random_symmetric(n, seed);
        let eig = sym_eig(&a).unwrap();
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!(max_abs_diff(&eig.reconstruct(), &a) <= 1e-8 * scale);
        prop_assert!(orthonormality_error(&eig.vectors) <= 1e-8);
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }
}
