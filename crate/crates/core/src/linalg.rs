//! Dense symmetric linear algebra.
//!
//! The symmetric eigensolver is Householder tridiagonalization followed by
//! the implicit QL algorithm (the classic `tred2`/`tql2` pair). Singular
//! values come from one-sided Jacobi rotations, which keep full relative
//! accuracy on the small singular values the RPCA baseline thresholds.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::dot;
use crate::{DataMatrix, Error, Result};

/// Relative eigenvalue floor used for inverse matrix powers: eigenvalues
/// below `DEFAULT_EIG_FLOOR · w_max` are clamped to that value.
pub const DEFAULT_EIG_FLOOR: f64 = 1e-10;

/// Largest relative asymmetry accepted by [`sym_eig`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Tolerance on negative eigenvalues, relative to the largest, before a
/// matrix stops counting as positive semidefinite.
pub const PSD_TOLERANCE: f64 = 1e-10;

const MAX_QL_ITERATIONS: usize = 60;
const MAX_JACOBI_SWEEPS: usize = 80;

/// Eigendecomposition `A = V·diag(w)·Vᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues, sorted descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: DataMatrix,
}

impl SymEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `V·diag(f(w))·Vᵀ`.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> DataMatrix {
        let n = self.dim();
        let mut out = DataMatrix::zeros(n, n);
        for (k, &w) in self.values.iter().enumerate() {
            let fk = f(w);
            if fk == 0.0 {
                continue;
            }
            let v = self.vectors.col(k);
            for j in 0..n {
                let s = fk * v[j];
                if s == 0.0 {
                    continue;
                }
                for (o, &vi) in out.col_mut(j).iter_mut().zip(v) {
                    *o += s * vi;
                }
            }
        }
        out.symmetrize();
        out
    }

    pub fn reconstruct(&self) -> DataMatrix {
        self.apply(|w| w)
    }

    /// `V·diag(max(w, floor)^q)·Vᵀ` with an absolute `floor`.
    ///
    /// Fails if the matrix is not PSD to within [`PSD_TOLERANCE`], or if a
    /// negative power is requested with a zero floor.
    pub fn power(&self, q: f64, floor: f64) -> Result<DataMatrix> {
        let clamped = self.clamped_values(q, floor)?;
        let mut k = 0;
        Ok(self.apply(|_| {
            let v = clamped[k];
            k += 1;
            v
        }))
    }

    /// `Σ max(w, floor)^q`, the trace of [`SymEig::power`] without forming it.
    pub fn power_trace(&self, q: f64, floor: f64) -> Result<f64> {
        Ok(self.clamped_values(q, floor)?.iter().sum())
    }

    fn clamped_values(&self, q: f64, floor: f64) -> Result<Vec<f64>> {
        clamped_powers(&self.values, q, floor)
    }
}

/// `max(w, floor)^q` for descending eigenvalues `w` of a PSD matrix.
pub(crate) fn clamped_powers(values: &[f64], q: f64, floor: f64) -> Result<Vec<f64>> {
    if !(floor >= 0.0) || !floor.is_finite() {
        return Err(Error::invalid("eigenvalue floor must be finite and >= 0"));
    }
    if q < 0.0 && floor == 0.0 {
        return Err(Error::invalid(
            "negative matrix power needs a positive eigenvalue floor",
        ));
    }
    let w_max = values.first().copied().unwrap_or(0.0).max(0.0);
    let w_min = values.last().copied().unwrap_or(0.0);
    if w_min < -PSD_TOLERANCE * w_max.max(f64::MIN_POSITIVE) && w_min < -1e-300 {
        return Err(Error::invalid(alloc::format!(
            "matrix is not positive semidefinite (eigenvalue {w_min:e}, largest {w_max:e})"
        )));
    }
    Ok(values
        .iter()
        .map(|&w| {
            let w = w.max(floor).max(0.0);
            if q == 1.0 {
                w
            } else if q == 0.5 {
                libm::sqrt(w)
            } else {
                libm::pow(w, q)
            }
        })
        .collect())
}

/// Full eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as `(A + Aᵀ)/2` first; asymmetry beyond
/// [`SYMMETRY_TOLERANCE`] (relative to the largest entry) is rejected.
pub fn sym_eig(a: &DataMatrix) -> Result<SymEig> {
    let n = a.rows();
    let mut v = symmetric_workspace(a)?;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e, true);
    tql2(n, Some(&mut v), &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let vectors = DataMatrix::new(n, n, v)?.select_cols(&order);
    let values = order.iter().map(|&i| d[i]).collect();
    Ok(SymEig { values, vectors })
}

/// Eigenvalues only, sorted descending. Same input rules as [`sym_eig`],
/// but skips accumulating the eigenvectors.
pub fn sym_eigvals(a: &DataMatrix) -> Result<Vec<f64>> {
    let n = a.rows();
    let mut v = symmetric_workspace(a)?;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e, false);
    tql2(n, None, &mut d, &mut e)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// Validates `a` and returns `(A + Aᵀ)/2` as column-major scratch space.
fn symmetric_workspace(a: &DataMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::invalid("eigendecomposition needs a square matrix"));
    }
    a.check_finite()?;
    let asym = a.relative_asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::invalid(alloc::format!(
            "matrix is not symmetric (relative asymmetry {asym:e})"
        )));
    }
    let mut v = a.clone();
    v.symmetrize();
    Ok(v.into_vec())
}

/// `A^q` for a symmetric PSD matrix, with eigenvalues clamped below at an
/// absolute `floor`.
pub fn psd_power(a: &DataMatrix, q: f64, floor: f64) -> Result<DataMatrix> {
    sym_eig(a)?.power(q, floor)
}

/// Largest singular value.
pub fn spectral_norm(a: &DataMatrix) -> Result<f64> {
    a.check_finite()?;
    if a.is_square() && a.relative_asymmetry() == 0.0 {
        let w = sym_eigvals(a)?;
        let hi = w.first().copied().unwrap_or(0.0).abs();
        let lo = w.last().copied().unwrap_or(0.0).abs();
        return Ok(hi.max(lo));
    }
    let gram = if a.rows() >= a.cols() { a.t_matmul(a) } else { a.transpose().t_matmul(&a.transpose()) };
    let w = sym_eigvals(&gram)?.first().copied().unwrap_or(0.0).max(0.0);
    Ok(libm::sqrt(w))
}

/// Top-`r` eigenpairs of a symmetric matrix, as `(V_r, S_r)`.
pub fn truncated_eig(a: &DataMatrix, r: usize) -> Result<(DataMatrix, Vec<f64>)> {
    if r == 0 || r > a.rows() {
        return Err(Error::invalid(alloc::format!(
            "truncation rank {r} outside 1..={}",
            a.rows()
        )));
    }
    let eig = sym_eig(a)?;
    let idx: Vec<usize> = (0..r).collect();
    Ok((eig.vectors.select_cols(&idx), eig.values[..r].to_vec()))
}

/// Thin SVD `A = U·diag(s)·Vᵀ` with `k = min(d, n)` singular values.
///
/// Columns of `U` belonging to exactly zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DataMatrix,
    /// Singular values, sorted descending.
    pub s: Vec<f64>,
    pub v: DataMatrix,
}

impl Svd {
    /// `U·diag(f(s))·Vᵀ`.
    pub fn recompose(&self, mut f: impl FnMut(usize, f64) -> f64) -> DataMatrix {
        let mut us = self.u.clone();
        for (k, &s) in self.s.iter().enumerate() {
            let fk = f(k, s);
            for x in us.col_mut(k) {
                *x *= fk;
            }
        }
        us.matmul(&self.v.transpose())
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.s.iter().sum()
    }
}

pub fn svd(a: &DataMatrix) -> Result<Svd> {
    a.check_finite()?;
    if a.rows() < a.cols() {
        let t = svd_tall(&a.transpose())?;
        return Ok(Svd { u: t.v, s: t.s, v: t.u });
    }
    svd_tall(a)
}

/// One-sided Jacobi on the columns of a `d × n` matrix with `d ≥ n`.
fn svd_tall(a: &DataMatrix) -> Result<Svd> {
    let (d, n) = a.shape();
    let mut w = a.clone();
    let mut v = DataMatrix::identity(n);
    let tol = 1e-15;
    let scale = f64::EPSILON * a.frobenius_norm();
    let negligible = scale * scale;
    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                if alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= tol * libm::sqrt(alpha * beta)
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_cols(&mut w, p, q, c, s);
                rotate_cols(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numerical("one-sided Jacobi SVD did not converge"));
    }
    let norms: Vec<f64> = (0..n).map(|j| libm::sqrt(dot(w.col(j), w.col(j)))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DataMatrix::zeros(d, n);
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sj = norms[j];
        s.push(sj);
        if sj > 0.0 {
            for (o, &x) in u.col_mut(k).iter_mut().zip(w.col(j)) {
                *o = x / sj;
            }
        }
    }
    Ok(Svd { u, s, v: v.select_cols(&order) })
}

fn rotate_cols(m: &mut DataMatrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.rows();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

// `v` holds the n×n work matrix column-major: element (row a, col b) lives
// at `b * n + a`, so the column sweeps below walk contiguous memory.

/// Householder reduction to tridiagonal form (`d` diagonal, `e` subdiagonal).
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    let ix = |a: usize, b: usize| b * n + a;
    for j in 0..n {
        d[j] = v[ix(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[ix(i - 1, j)];
                v[ix(i, j)] = 0.0;
                v[ix(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[ix(j, i)] = f;
                g = e[j] + v[ix(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[ix(k, j)] * d[k];
                    e[k] += v[ix(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[ix(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[ix(i - 1, j)];
                v[ix(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for j in 0..n {
            d[j] = v[ix(j, j)];
        }
        e[0] = 0.0;
        return;
    }

    // Accumulate the transformations.
    for i in 0..n.saturating_sub(1) {
        v[ix(n - 1, i)] = v[ix(i, i)];
        v[ix(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[ix(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[ix(k, i + 1)] * v[ix(k, j)];
                }
                for k in 0..=i {
                    v[ix(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[ix(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[ix(n - 1, j)];
        v[ix(n - 1, j)] = 0.0;
    }
    v[ix(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL iteration on the tridiagonal form, accumulating into `v`.
fn tql2(n: usize, mut v: Option<&mut [f64]>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::numerical("symmetric QL iteration did not converge"));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    if let Some(v) = v.as_deref_mut() {
                        let (head, tail) = v.split_at_mut((i + 1) * n);
                        let col_i = &mut head[i * n..];
                        let col_i1 = &mut tail[..n];
                        for (a, b) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                            let hb = *b;
                            *b = s * *a + c * hb;
                            *a = c * *a - s * hb;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
