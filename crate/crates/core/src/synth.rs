//! Synthetic nonlinear data, sparse noise models and recovery metrics.
//!
//! All randomness comes from `ChaCha8Rng` seeded with a `u64`, so results
//! are reproducible across platforms. Independent streams (one per trial,
//! say) are derived from a master seed with [`split_seed`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{DataMatrix, Error, Result};

/// Derives the seed of stream `stream` from `master`.
///
/// `z = master + (stream + 1)·0x9E3779B97F4A7C15`, followed by the
/// SplitMix64 output mix. Distinct streams give well-separated seeds.
pub fn split_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of a synthetic data set: `subspaces` blocks of `n / subspaces`
/// samples each, every block an independent draw of the nonlinear model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub d: usize,
    /// Latent dimension of each block.
    pub r: usize,
    pub n: usize,
    pub subspaces: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// Single nonlinear subspace, `d = 20, r = 2, n = 100`.
    pub fn single(seed: u64) -> Self {
        SynthSpec { d: 20, r: 2, n: 100, subspaces: 1, seed }
    }

    /// Five nonlinear subspaces of 50 samples each, `20 × 250` in total.
    pub fn multi(seed: u64) -> Self {
        SynthSpec { d: 20, r: 2, n: 250, subspaces: 5, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r >= self.d {
            return Err(Error::invalid(format!("need 1 <= r < d, got r={} d={}", self.r, self.d)));
        }
        if self.subspaces == 0 || self.n == 0 || self.n % self.subspaces != 0 {
            return Err(Error::invalid(format!(
                "n={} must be a positive multiple of subspaces={}",
                self.n, self.subspaces
            )));
        }
        Ok(())
    }
}

/// `P₁Z + 0.5·(P₂Z^{⊙2} + P₃Z^{⊙3})`, with powers taken entrywise.
pub fn nonlinear_map(p1: &DataMatrix, p2: &DataMatrix, p3: &DataMatrix, z: &DataMatrix) -> DataMatrix {
    let z2 = z.map(|v| v * v);
    let z3 = z.map(|v| v * v * v);
    let mut x = p1.matmul(z);
    x.axpy(0.5, &p2.matmul(&z2));
    x.axpy(0.5, &p3.matmul(&z3));
    x
}

/// Draws a data matrix and the block label of every column.
///
/// Per block, in this order: `P₁, P₂, P₃` (each `d × r`, standard normal,
/// column-major), then `Z` (`r × n_b`, uniform on `[−1, 1)`).
pub fn gen_synthetic(spec: &SynthSpec) -> Result<(DataMatrix, Vec<usize>)> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let nb = spec.n / spec.subspaces;
    let mut blocks = Vec::with_capacity(spec.subspaces);
    let mut labels = Vec::with_capacity(spec.n);
    for b in 0..spec.subspaces {
        let mut normal = |_, _| rng.sample::<f64, _>(StandardNormal);
        let p1 = DataMatrix::from_fn(spec.d, spec.r, &mut normal);
        let p2 = DataMatrix::from_fn(spec.d, spec.r, &mut normal);
        let p3 = DataMatrix::from_fn(spec.d, spec.r, &mut normal);
        let z = DataMatrix::from_fn(spec.r, nb, |_, _| rng.random_range(-1.0..1.0));
        blocks.push(nonlinear_map(&p1, &p2, &p3, &z));
        labels.extend(core::iter::repeat(b).take(nb));
    }
    Ok((DataMatrix::hstack(&blocks)?, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Adds `N(0, sd²)` to a random subset of entries.
    SparseGaussian,
    /// Sets a random subset of entries to the data minimum or maximum.
    SaltPepper,
    /// Overwrites a square block in each chosen column, viewed as an image.
    BlockMask,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Fraction of entries touched; for `BlockMask`, fraction of columns.
    pub density: f64,
    pub gaussian_sd: f64,
    /// Block side as a fraction of the image height and width.
    pub block_frac: f64,
    pub mask_value: f64,
    /// `(height, width)` of each column viewed as an image stored
    /// column-major. `None` means a square image.
    pub image_shape: Option<(usize, usize)>,
}

impl NoiseSpec {
    pub fn sparse_gaussian(density: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::SparseGaussian,
            density,
            gaussian_sd: 1.0,
            block_frac: 0.2,
            mask_value: 0.0,
            image_shape: None,
        }
    }

    pub fn salt_pepper(density: f64) -> Self {
        NoiseSpec { kind: NoiseKind::SaltPepper, ..Self::sparse_gaussian(density) }
    }

    pub fn block_mask(mask_value: f64) -> Self {
        NoiseSpec { kind: NoiseKind::BlockMask, mask_value, ..Self::sparse_gaussian(1.0) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::invalid(format!("noise density must lie in [0, 1], got {}", self.density)));
        }
        if !(self.gaussian_sd >= 0.0) || !(self.block_frac > 0.0 && self.block_frac <= 1.0) {
            return Err(Error::invalid("gaussian_sd must be >= 0 and block_frac in (0, 1]"));
        }
        Ok(())
    }
}

/// Corrupts `x`, returning the noisy matrix and the sorted column-major
/// indices of every entry that was touched. Untouched entries are copied
/// bit for bit.
///
/// Entry-wise models touch exactly `⌊density·d·n⌋` entries chosen without
/// replacement.
pub fn inject_noise(x: &DataMatrix, spec: &NoiseSpec, seed: u64) -> Result<(DataMatrix, Vec<usize>)> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut m = x.clone();
    let total = x.rows() * x.cols();
    let mut mask = match spec.kind {
        NoiseKind::SparseGaussian | NoiseKind::SaltPepper => {
            let count = libm::floor(spec.density * total as f64) as usize;
            let mut idx = index::sample(&mut rng, total, count.min(total)).into_vec();
            idx.sort_unstable();
            idx
        }
        NoiseKind::BlockMask => Vec::new(),
    };
    match spec.kind {
        NoiseKind::SparseGaussian => {
            let data = m.as_mut_slice();
            for &k in &mask {
                let z: f64 = rng.sample(StandardNormal);
                data[k] += spec.gaussian_sd * z;
            }
        }
        NoiseKind::SaltPepper => {
            let (lo, hi) = (x.min_value(), x.max_value());
            let data = m.as_mut_slice();
            for &k in &mask {
                data[k] = if rng.random::<bool>() { hi } else { lo };
            }
        }
        NoiseKind::BlockMask => {
            let (h, w) = image_shape(x.rows(), spec.image_shape)?;
            let bh = (libm::round(spec.block_frac * h as f64) as usize).clamp(1, h);
            let bw = (libm::round(spec.block_frac * w as f64) as usize).clamp(1, w);
            let n = x.cols();
            let count = libm::floor(spec.density * n as f64) as usize;
            let mut cols = index::sample(&mut rng, n, count.min(n)).into_vec();
            cols.sort_unstable();
            for j in cols {
                let top = rng.random_range(0..=h - bh);
                let left = rng.random_range(0..=w - bw);
                for c in left..left + bw {
                    for r in top..top + bh {
                        let i = c * h + r;
                        m[(i, j)] = spec.mask_value;
                        mask.push(j * x.rows() + i);
                    }
                }
            }
            mask.sort_unstable();
        }
    }
    Ok((m, mask))
}

fn image_shape(d: usize, shape: Option<(usize, usize)>) -> Result<(usize, usize)> {
    match shape {
        Some((h, w)) if h * w == d => Ok((h, w)),
        Some((h, w)) => Err(Error::invalid(format!("image shape {h}x{w} does not match {d} rows"))),
        None => {
            let side = libm::round(libm::sqrt(d as f64)) as usize;
            if side * side == d {
                Ok((side, side))
            } else {
                Err(Error::invalid(format!(
                    "{d} rows is not a square image; give the image shape explicitly"
                )))
            }
        }
    }
}

/// `‖X − X̂‖_F / ‖X‖_F`.
pub fn relative_error(truth: &DataMatrix, estimate: &DataMatrix) -> Result<f64> {
    truth.check_same_shape(estimate, "estimate")?;
    let denom = truth.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::invalid("relative error against a zero matrix is undefined"));
    }
    Ok((truth - estimate).frobenius_norm() / denom)
}

/// Leave-one-out `k`-nearest-neighbour error rate.
///
/// Each sample is classified by a majority vote of its `k` nearest other
/// samples (Euclidean). Vote ties go to the tied label whose member is
/// nearest; distance ties are broken by sample index.
pub fn knn_error(x: &DataMatrix, labels: &[usize], k: usize) -> Result<f64> {
    let n = x.cols();
    if labels.len() != n {
        return Err(Error::invalid(format!("{} labels for {n} samples", labels.len())));
    }
    if k == 0 || n <= k {
        return Err(Error::invalid(format!("need 1 <= k < n, got k={k} n={n}")));
    }
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut wrong = 0usize;
    let mut neighbours: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    let mut votes = vec![0usize; classes];
    for i in 0..n {
        neighbours.clear();
        for j in (0..n).filter(|&j| j != i) {
            let d: f64 = x.col(i).iter().zip(x.col(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            neighbours.push((d, j));
        }
        neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        votes.iter_mut().for_each(|v| *v = 0);
        for &(_, j) in &neighbours[..k] {
            votes[labels[j]] += 1;
        }
        let top = votes.iter().copied().max().unwrap_or(0);
        let predicted = neighbours[..k]
            .iter()
            .map(|&(_, j)| labels[j])
            .find(|&l| votes[l] == top)
            .expect("k >= 1");
        if predicted != labels[i] {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / n as f64)
}
