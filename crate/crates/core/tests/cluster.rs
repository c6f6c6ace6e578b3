mod common;

use common::*;
use proptest::prelude::*;
use rkpca_core::cluster::{
    build_affinity, cluster_pipeline, clustering_error, kmeans, normalize_columns, spectral_cluster,
    ClusterParams, Recovery,
};
use rkpca_core::kernel::{kernel_matrix, KernelSpec};
use rkpca_core::solvers::SolverConfig;
use rkpca_core::synth::{gen_synthetic, SynthSpec};
use rkpca_core::DataMatrix;

fn params(clusters: usize, rank: usize, power: u32) -> ClusterParams {
    ClusterParams { clusters, rank, power }
}

/// Brute-force matching error over every injective relabeling.
fn brute_force_error(labels: &[usize], truth: &[usize]) -> f64 {
    let classes = |v: &[usize]| {
        let mut c: Vec<usize> = v.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    let (pred, tru) = (classes(labels), classes(truth));
    let size = pred.len().max(tru.len());
    let mut best = 0usize;
    let mut perm: Vec<usize> = (0..size).collect();
    permute(&mut perm, 0, &mut |p| {
        let matched = labels
            .iter()
            .zip(truth)
            .filter(|(l, t)| {
                let pi = pred.iter().position(|x| x == *l).unwrap();
                tru.get(p[pi]) == Some(*t)
            })
            .count();
        best = best.max(matched);
    });
    1.0 - best as f64 / labels.len() as f64
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

fn argmax_row(a: &DataMatrix, i: usize) -> usize {
    (0..a.cols()).max_by(|&x, &y| a[(i, x)].total_cmp(&a[(i, y)]).then(y.cmp(&x))).unwrap()
}

#[test]
fn clustering_error_examples() {
    assert_eq!(clustering_error(&[1, 1, 2, 2], &[1, 1, 2, 2]).unwrap(), 0.0);
    assert_eq!(clustering_error(&[2, 2, 1, 1], &[1, 1, 2, 2]).unwrap(), 0.0);
    assert_eq!(clustering_error(&[1, 2, 2, 2], &[1, 1, 2, 2]).unwrap(), 0.25);
    assert_eq!(brute_force_error(&[1, 2, 2, 2], &[1, 1, 2, 2]), 0.25);
}

#[test]
fn affinity_examples() {
    let x = DataMatrix::from_rows(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
    let k = kernel_matrix(&x, &KernelSpec::linear()).unwrap();
    for p in [2, 4, 6] {
        let (a, zero) = build_affinity(&k, &params(2, 2, p)).unwrap();
        assert_eq!(zero, 0);
        assert!((a[(0, 1)] - 1.0).abs() < 1e-12);
        assert!(a[(0, 2)].abs() < 1e-12 && a[(1, 2)].abs() < 1e-12);
        assert!(a.diag().iter().all(|&v| v == 0.0));
    }
    assert!(build_affinity(&k, &params(2, 2, 3)).is_err());
    assert!(build_affinity(&k, &params(2, 4, 2)).is_err());
    assert!(build_affinity(&k, &params(1, 2, 2)).is_err());
}

#[test]
fn affinity_exponent_law_and_argmax() {
    let k = random_psd(15, 6, 3);
    let (a2, _) = build_affinity(&k, &params(2, 4, 2)).unwrap();
    let (a4, _) = build_affinity(&k, &params(2, 4, 4)).unwrap();
    let (a8, _) = build_affinity(&k, &params(2, 4, 8)).unwrap();
    assert!((&a4 - &a2.hadamard(&a2)).max_abs() < 1e-12);
    for i in 0..15 {
        assert_eq!(argmax_row(&a4, i), argmax_row(&a8, i), "row {i}");
    }
}

#[test]
fn block_diagonal_affinity_splits_exactly() {
    let a = DataMatrix::from_fn(8, 8, |i, j| if i != j && (i < 4) == (j < 4) { 1.0 } else { 0.0 });
    let labels = spectral_cluster(&a, 2, 5).unwrap();
    assert_eq!(clustering_error(&labels, &[0, 0, 0, 0, 1, 1, 1, 1]).unwrap(), 0.0);
    assert!(labels.iter().all(|&l| l == 1 || l == 2));
    assert_eq!(labels, spectral_cluster(&a, 2, 5).unwrap());
}

#[test]
fn isolated_vertex_still_clusters() {
    let a = DataMatrix::from_fn(7, 7, |i, j| if i != j && i < 6 && j < 6 && (i < 3) == (j < 3) { 1.0 } else { 0.0 });
    let labels = spectral_cluster(&a, 2, 1).unwrap();
    assert_eq!(labels.len(), 7);
    assert_eq!(clustering_error(&labels[..6], &[0, 0, 0, 1, 1, 1]).unwrap(), 0.0);
}

#[test]
fn kmeans_separated_blobs() {
    let pts = DataMatrix::from_rows(&[&[0.0, 0.1, -0.1, 10.0, 10.1, 9.9, 0.0, 0.1], &[0.0, 0.0, 0.1, 0.0, 0.1, 0.0, 10.0, 10.0]]);
    let labels = kmeans(&pts, 3, 4, 5);
    assert_eq!(clustering_error(&labels, &[0, 0, 0, 1, 1, 1, 2, 2]).unwrap(), 0.0);
}

#[test]
fn normalize_columns_gives_unit_norms() {
    let m = DataMatrix::from_rows(&[&[3.0, 0.0, 1.0], &[4.0, 0.0, 0.0]]);
    let n = normalize_columns(&m);
    assert_eq!(n.col(0), &[0.6, 0.8]);
    assert_eq!(n.col(1), &[0.0, 0.0]);
    assert_eq!(n.col(2), &[1.0, 0.0]);
}

#[test]
fn clean_five_subspace_data_clusters_well() {
    let p = params(5, 10, 12);
    let mut total = 0.0;
    for seed in 0..10 {
        let (x, truth) = gen_synthetic(&SynthSpec::multi(4000 + seed)).unwrap();
        let r = cluster_pipeline(&x, &KernelSpec::rbf(2.0), &SolverConfig::default(), &p, &Recovery::Raw, seed, Some(&truth))
            .unwrap();
        total += r.matched_error.unwrap();
    }
    let mean = total / 10.0;
    assert!(mean < 0.15, "mean clean clustering error {mean}");
}

#[test]
fn pipeline_smoke_on_single_subspace() {
    let (x, truth) = gen_synthetic(&SynthSpec { n: 40, ..SynthSpec::single(2) }).unwrap();
    let cfg = SolverConfig { t_max: 30, ..Default::default() };
    let r = cluster_pipeline(&x, &KernelSpec::rbf(1.0), &cfg, &params(2, 4, 4), &Recovery::RkpcaPlm, 0, Some(&truth))
        .unwrap();
    assert_eq!(r.labels.len(), 40);
    assert!(r.labels.iter().all(|&l| (1..=2).contains(&l)));
    let e = r.matched_error.unwrap();
    assert!((0.0..=1.0).contains(&e));
    assert_eq!(r.affinity.relative_asymmetry(), 0.0);
}

#[test]
fn pipeline_rejects_bad_parameters() {
    let x = normal_matrix(4, 10, 1);
    let spec = KernelSpec::rbf(1.0);
    let cfg = SolverConfig::default();
    assert!(cluster_pipeline(&x, &spec, &cfg, &params(2, 3, 5), &Recovery::Raw, 0, None).is_err());
    assert!(cluster_pipeline(&x, &spec, &cfg, &params(2, 11, 2), &Recovery::Raw, 0, None).is_err());
    assert!(cluster_pipeline(&x, &spec, &cfg, &params(2, 3, 2), &Recovery::Raw, 0, Some(&[0; 9])).is_err());
}

proptest! {
    #![proptest_config(prop_config(64))]

    #[test]
    fn clustering_error_matches_brute_force(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..30),
        shift in 0usize..4,
    ) {
        let labels: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let truth: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let e = clustering_error(&labels, &truth).unwrap();
        prop_assert!((e - brute_force_error(&labels, &truth)).abs() < 1e-12);
        let relabeled: Vec<usize> = labels.iter().map(|l| (l + shift) % 4 + 10).collect();
        prop_assert_eq!(clustering_error(&relabeled, &truth).unwrap(), e);
        prop_assert_eq!(clustering_error(&truth, &labels).unwrap(), e);
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn affinity_is_a_valid_similarity(n in 4usize..14, k in 2usize..8, pick in 0usize..8, half_p in 1u32..5, seed in any::<u64>()) {
        let kmat = random_psd(n, k, seed);
        let rank = 1 + pick % k.min(n);
        let (a, _) = build_affinity(&kmat, &params(2, rank, 2 * half_p)).unwrap();
        prop_assert_eq!(a.relative_asymmetry(), 0.0);
        prop_assert!(a.diag().iter().all(|&v| v == 0.0));
        prop_assert!(a.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn affinity_is_permutation_equivariant(n in 4usize..12, rot in 1usize..12, seed in any::<u64>()) {
        // Distinct eigenvalues keep the rank-r eigenspace well defined; the
        // eigenvector signs may still differ between the two problems.
        let q = to_na(&normal_matrix(n, n, seed)).qr().q();
        let w: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let kmat = from_na(&(&q * nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(w)) * q.transpose()));
        let mut kmat = kmat;
        kmat.symmetrize();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let permuted = DataMatrix::from_fn(n, n, |i, j| kmat[(perm[i], perm[j])]);
        let p = params(2, 3.min(n), 4);
        let (a, _) = build_affinity(&kmat, &p).unwrap();
        let (b, _) = build_affinity(&permuted, &p).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((b[(i, j)] - a[(perm[i], perm[j])]).abs() < 1e-8);
            }
        }
    }
}
