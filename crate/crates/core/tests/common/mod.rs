#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rkpca_core::synth::rng_from_seed;
use rkpca_core::DataMatrix;

pub fn to_na(m: &DataMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> DataMatrix {
    DataMatrix::new(m.nrows(), m.ncols(), m.as_slice().to_vec()).unwrap()
}

pub fn normal_matrix(rows: usize, cols: usize, seed: u64) -> DataMatrix {
    let mut rng = rng_from_seed(seed);
    DataMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

pub fn uniform_matrix(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> DataMatrix {
    let mut rng = rng_from_seed(seed);
    DataMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// `G Gᵀ` for a random `n × k` factor `G`: PSD with rank `min(n, k)`.
pub fn random_psd(n: usize, k: usize, seed: u64) -> DataMatrix {
    let g = normal_matrix(k, n, seed);
    let mut a = g.t_matmul(&g);
    a.symmetrize();
    a
}

pub fn random_symmetric(n: usize, seed: u64) -> DataMatrix {
    let g = normal_matrix(n, n, seed);
    let mut a = &g + &g.transpose();
    a.symmetrize();
    a
}

/// Singular values of `m`, descending, from nalgebra.
pub fn na_singular_values(m: &DataMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigenvalues of a symmetric matrix, descending, from nalgebra.
pub fn na_eigenvalues(m: &DataMatrix) -> Vec<f64> {
    let mut w: Vec<f64> = to_na(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

/// Largest singular value by power iteration on `AᵀA`.
pub fn power_iteration_norm(a: &DataMatrix, iters: usize) -> f64 {
    let na = to_na(a);
    let ata = na.transpose() * &na;
    let mut v = nalgebra::DVector::from_fn(a.cols(), |i, _| 1.0 + 0.1 * i as f64);
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = &ata * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w / norm;
    }
    lambda.sqrt()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Property-test settings with a fixed RNG seed so every run sees the same cases.
pub fn prop_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed_2024),
        failure_persistence: None,
        ..Default::default()
    }
}
