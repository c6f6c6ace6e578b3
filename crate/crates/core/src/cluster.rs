//! Robust subspace clustering.
//!
//! The pipeline recovers clean data, takes the top-`r` eigenvectors of its
//! kernel matrix, normalizes their rows, and raises the resulting cosine
//! similarities to an even power `p` to get an affinity matrix. That
//! matrix is then split by normalized spectral clustering.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::baselines::{solve_rpca, RpcaConfig};
use crate::kernel::{kernel_matrix, KernelSpec};
use crate::linalg::truncated_eig;
use crate::solvers::{solve_admm_btls, solve_plm_adss, SolverConfig};
use crate::synth::rng_from_seed;
use crate::{DataMatrix, Error, Result};

pub const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterParams {
    pub clusters: usize,
    /// Number of kernel eigenvectors kept.
    pub rank: usize,
    /// Affinity exponent; must be even.
    pub power: u32,
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::invalid(format!("need at least 2 clusters, got {}", self.clusters)));
        }
        if self.rank == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if self.power < 2 || self.power % 2 != 0 {
            return Err(Error::invalid(format!(
                "affinity exponent p must be an even integer >= 2, got {}",
                self.power
            )));
        }
        Ok(())
    }

    fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        if self.rank > n {
            return Err(Error::invalid(format!("rank {} exceeds sample count {n}", self.rank)));
        }
        if self.clusters > n {
            return Err(Error::invalid(format!("{} clusters for {n} samples", self.clusters)));
        }
        Ok(())
    }
}

/// How the clean data are recovered before the affinity is built.
#[derive(Debug, Clone, PartialEq)]
pub enum Recovery {
    /// RKPCA via PLM+AdSS; affinity from the RBF kernel of the recovery.
    RkpcaPlm,
    /// RKPCA via ADMM+BTLS; affinity from the RBF kernel of the recovery.
    RkpcaAdmm,
    /// Convex RPCA; affinity from the linear kernel `XᵀX` of the recovery.
    Rpca(RpcaConfig),
    /// No recovery; affinity from the RBF kernel of the input.
    Raw,
}

#[derive(Debug, Clone)]
pub struct ClusterResult {
    /// Cluster label of every sample, in `1..=clusters`.
    pub labels: Vec<usize>,
    pub affinity: DataMatrix,
    /// Clustering error against the supplied ground truth.
    pub matched_error: Option<f64>,
    pub recovered: DataMatrix,
    /// Samples whose eigenvector row was zero (their affinity row is zero).
    pub zero_rows: usize,
}

/// Affinity `A_ij = ([V̂ V̂ᵀ]_ij)^p` with `A_ii = 0`, where `V̂` holds the
/// row-normalized top-`r` eigenvectors of `k`.
///
/// Returns the affinity and the number of zero rows in `V_r` (those rows
/// are left at zero).
pub fn build_affinity(k: &DataMatrix, params: &ClusterParams) -> Result<(DataMatrix, usize)> {
    params.validate_for(k.rows())?;
    let (mut v, _) = truncated_eig(k, params.rank)?;
    let zero_rows = normalize_rows(&mut v);
    if zero_rows > 0 {
        log::warn!("{zero_rows} sample(s) have a zero eigenvector row; their affinity is zero");
    }
    Ok((affinity_from_rows(&v, params.power), zero_rows))
}

/// Scales every row of `v` to unit norm; returns how many rows were zero.
fn normalize_rows(v: &mut DataMatrix) -> usize {
    let mut zero = 0;
    for i in 0..v.rows() {
        let norm = libm::sqrt((0..v.cols()).map(|j| v[(i, j)] * v[(i, j)]).sum::<f64>());
        if norm == 0.0 {
            zero += 1;
            continue;
        }
        for j in 0..v.cols() {
            v[(i, j)] /= norm;
        }
    }
    zero
}

fn affinity_from_rows(v: &DataMatrix, power: u32) -> DataMatrix {
    let n = v.rows();
    let vt = v.transpose();
    let mut a = DataMatrix::zeros(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            let g: f64 = vt.col(i).iter().zip(vt.col(j)).map(|(x, y)| x * y).sum();
            let g = g.clamp(-1.0, 1.0);
            let val = libm::pow(g, power as f64);
            a[(i, j)] = val;
            a[(j, i)] = val;
        }
    }
    a
}

/// Normalized spectral clustering of a symmetric non-negative affinity.
///
/// Embeds samples with the top-`clusters` eigenvectors of `D^{-1/2} A D^{-1/2}`,
/// normalizes the embedding rows, and runs k-means++ with
/// [`KMEANS_RESTARTS`] seeded restarts, keeping the lowest inertia.
/// Isolated samples (zero degree) embed at the origin. Labels are
/// `1..=clusters`.
pub fn spectral_cluster(a: &DataMatrix, clusters: usize, seed: u64) -> Result<Vec<usize>> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::invalid("affinity must be square"));
    }
    if clusters == 0 || clusters > n {
        return Err(Error::invalid(format!("{clusters} clusters for {n} samples")));
    }
    if a.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("affinity entries must be non-negative"));
    }
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = a.col(i).iter().sum();
            if d > 0.0 { 1.0 / libm::sqrt(d) } else { 0.0 }
        })
        .collect();
    let mut l = DataMatrix::from_fn(n, n, |i, j| inv_sqrt_deg[i] * a[(i, j)] * inv_sqrt_deg[j]);
    l.symmetrize();
    let (mut emb, _) = truncated_eig(&l, clusters)?;
    normalize_rows(&mut emb);
    let points = emb.transpose();
    Ok(kmeans(&points, clusters, seed, KMEANS_RESTARTS).into_iter().map(|l| l + 1).collect())
}

/// Lloyd's k-means on the columns of `points`, best of `restarts` k-means++
/// initializations. Returns labels in `0..k`.
pub fn kmeans(points: &DataMatrix, k: usize, seed: u64, restarts: usize) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts.max(1) {
        let (inertia, labels) = kmeans_once(points, k, &mut rng);
        if best.as_ref().map_or(true, |(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.expect("at least one restart").1
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_once<R: Rng + ?Sized>(points: &DataMatrix, k: usize, rng: &mut R) -> (f64, Vec<usize>) {
    let (dim, n) = points.shape();
    let mut centers = DataMatrix::zeros(dim, k);

    // k-means++ seeding.
    let first = rng.random_range(0..n);
    centers.col_mut(0).copy_from_slice(points.col(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points.col(i), centers.col(0))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.col_mut(c).copy_from_slice(points.col(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.col(i), centers.col(c)));
        }
    }

    let mut labels = vec![usize::MAX; n];
    let mut inertia = 0.0;
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        inertia = 0.0;
        for i in 0..n {
            let (best, dist) = (0..k)
                .map(|c| (c, sq_dist(points.col(i), centers.col(c))))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            inertia += dist;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut counts = vec![0usize; k];
        let mut sums = DataMatrix::zeros(dim, k);
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, &p) in sums.col_mut(labels[i]).iter_mut().zip(points.col(i)) {
                *s += p;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..n)
                    .map(|i| (i, sq_dist(points.col(i), centers.col(labels[i]))))
                    .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc })
                    .0;
                centers.col_mut(c).copy_from_slice(points.col(far));
            } else {
                let inv = 1.0 / counts[c] as f64;
                for (dst, &s) in centers.col_mut(c).iter_mut().zip(sums.col(c)) {
                    *dst = s * inv;
                }
            }
        }
    }
    (inertia, labels)
}

/// `1 − (best one-to-one label matching)/n`, with the matching found by the
/// Hungarian method on the confusion matrix.
pub fn clustering_error(labels: &[usize], truth: &[usize]) -> Result<f64> {
    if labels.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} labels against {} ground-truth entries",
            labels.len(),
            truth.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::invalid("no samples to compare"));
    }
    let pred_ids = dense_ids(labels);
    let true_ids = dense_ids(truth);
    let rows = pred_ids.iter().max().unwrap() + 1;
    let cols = true_ids.iter().max().unwrap() + 1;
    let size = rows.max(cols);
    let mut confusion = vec![vec![0i64; size]; size];
    for (&p, &t) in pred_ids.iter().zip(&true_ids) {
        confusion[p][t] += 1;
    }
    let max = confusion.iter().flatten().copied().max().unwrap_or(0);
    let cost: Vec<Vec<i64>> = confusion.iter().map(|r| r.iter().map(|&c| max - c).collect()).collect();
    let assignment = hungarian(&cost);
    let matched: i64 = assignment.iter().enumerate().map(|(r, &c)| confusion[r][c]).sum();
    Ok(1.0 - matched as f64 / labels.len() as f64)
}

/// Maps arbitrary labels to `0..k` in order of first appearance.
fn dense_ids(labels: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(i) => i,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect()
}

/// Minimum-cost perfect assignment on a square cost matrix; returns the
/// column assigned to each row.
pub(crate) fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    // Potentials-based O(n³) method with 1-based sentinel column 0.
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Scales every column to unit ℓ₂ norm (zero columns are left alone).
pub fn normalize_columns(m: &DataMatrix) -> DataMatrix {
    let mut out = m.clone();
    for j in 0..out.cols() {
        let norm = libm::sqrt(out.col(j).iter().map(|v| v * v).sum::<f64>());
        if norm > 0.0 {
            out.col_mut(j).iter_mut().for_each(|v| *v /= norm);
        }
    }
    out
}

/// Recovery, affinity and spectral clustering in one call.
pub fn cluster_pipeline(
    m: &DataMatrix,
    spec: &KernelSpec,
    cfg: &SolverConfig,
    params: &ClusterParams,
    recovery: &Recovery,
    seed: u64,
    truth: Option<&[usize]>,
) -> Result<ClusterResult> {
    params.validate_for(m.cols())?;
    if let Some(t) = truth {
        if t.len() != m.cols() {
            return Err(Error::invalid(format!("{} truth labels for {} samples", t.len(), m.cols())));
        }
    }
    let resolved = spec.resolve(m)?;
    let (recovered, kernel) = match recovery {
        Recovery::RkpcaPlm => {
            let x = solve_plm_adss(m, &resolved, cfg)?.x;
            let k = kernel_matrix(&x, &resolved)?;
            (x, k)
        }
        Recovery::RkpcaAdmm => {
            let x = solve_admm_btls(m, &resolved, cfg)?.x;
            let k = kernel_matrix(&x, &resolved)?;
            (x, k)
        }
        Recovery::Rpca(rcfg) => {
            let x = solve_rpca(m, rcfg)?.x;
            let k = kernel_matrix(&x, &KernelSpec::linear())?;
            (x, k)
        }
        Recovery::Raw => (m.clone(), kernel_matrix(m, &resolved)?),
    };
    let (affinity, zero_rows) = build_affinity(&kernel, params)?;
    let labels = spectral_cluster(&affinity, params.clusters, seed)?;
    let matched_error = truth.map(|t| clustering_error(&labels, t)).transpose()?;
    Ok(ClusterResult { labels, affinity, matched_error, recovered, zero_rows })
}
