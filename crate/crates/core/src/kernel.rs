//! Kernel matrices and the helper matrices shared by both solvers.

use crate::linalg::{clamped_powers, sym_eig, sym_eigvals, SymEig};
use crate::{DataMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `k(x, y) = exp(−‖x − y‖² / (2σ²))`
    Rbf,
    /// `k(x, y) = xᵀy`
    Linear,
}

/// Kernel family and parameters.
///
/// For RBF kernels `sigma` is either fixed up front or left `None` and
/// filled in from the data with [`bandwidth_heuristic`] by
/// [`KernelSpec::resolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub sigma: Option<f64>,
    /// Multiplier on the mean pairwise distance when `sigma` is derived.
    pub beta: f64,
    /// Schatten exponent in `(0, 1]`; the trace term is `tr(K^{p/2})`.
    pub schatten_p: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::rbf(1.0)
    }
}

impl KernelSpec {
    /// RBF kernel with bandwidth `beta ×` mean pairwise distance.
    pub fn rbf(beta: f64) -> Self {
        KernelSpec { family: KernelFamily::Rbf, sigma: None, beta, schatten_p: 1.0 }
    }

    pub fn rbf_with_sigma(sigma: f64) -> Self {
        KernelSpec { family: KernelFamily::Rbf, sigma: Some(sigma), beta: 1.0, schatten_p: 1.0 }
    }

    pub fn linear() -> Self {
        KernelSpec { family: KernelFamily::Linear, sigma: None, beta: 1.0, schatten_p: 1.0 }
    }

    pub fn with_schatten_p(mut self, p: f64) -> Self {
        self.schatten_p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.schatten_p > 0.0 && self.schatten_p <= 1.0) {
            return Err(Error::invalid(alloc::format!(
                "Schatten exponent must lie in (0, 1], got {}",
                self.schatten_p
            )));
        }
        if self.family == KernelFamily::Rbf {
            match self.sigma {
                Some(s) if !(s > 0.0 && s.is_finite()) => {
                    return Err(Error::invalid(alloc::format!("RBF bandwidth must be > 0, got {s}")));
                }
                None if !(self.beta > 0.0 && self.beta.is_finite()) => {
                    return Err(Error::invalid(alloc::format!(
                        "bandwidth factor beta must be > 0, got {}",
                        self.beta
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Fills in `sigma` from `data` when it is not fixed.
    pub fn resolve(&self, data: &DataMatrix) -> Result<KernelSpec> {
        self.validate()?;
        let mut out = *self;
        if self.family == KernelFamily::Rbf && self.sigma.is_none() {
            out.sigma = Some(bandwidth_heuristic(data, self.beta)?);
        }
        Ok(out)
    }

    /// The RBF bandwidth; errors if the spec has not been resolved.
    pub fn sigma(&self) -> Result<f64> {
        match (self.family, self.sigma) {
            (KernelFamily::Rbf, Some(s)) => Ok(s),
            (KernelFamily::Rbf, None) => Err(Error::invalid("RBF bandwidth has not been resolved")),
            (KernelFamily::Linear, _) => Err(Error::invalid("linear kernel has no bandwidth")),
        }
    }
}

/// `σ = (β/n²)·Σᵢ Σⱼ ‖xᵢ − xⱼ‖`, over all ordered pairs including `i = j`.
pub fn bandwidth_heuristic(x: &DataMatrix, beta: f64) -> Result<f64> {
    if x.cols() < 2 {
        return Err(Error::invalid("bandwidth heuristic needs at least two samples"));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid("bandwidth factor beta must be > 0"));
    }
    x.check_finite()?;
    let n = x.cols();
    let mut total = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            total += libm::sqrt(sq_dist(x.col(i), x.col(j)));
        }
    }
    // Each unordered pair appears twice among the n² ordered ones.
    let sigma = beta * 2.0 * total / (n * n) as f64;
    if sigma == 0.0 {
        return Err(Error::DegenerateData(
            "all samples are identical; the RBF bandwidth would be zero".into(),
        ));
    }
    Ok(sigma)
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared Euclidean distances between all pairs of columns.
pub fn pairwise_sq_distances(x: &DataMatrix) -> DataMatrix {
    let n = x.cols();
    let mut d = DataMatrix::zeros(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            let v = sq_dist(x.col(i), x.col(j));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// The `n × n` kernel matrix of the columns of `x`.
pub fn kernel_matrix(x: &DataMatrix, spec: &KernelSpec) -> Result<DataMatrix> {
    spec.validate()?;
    x.check_finite()?;
    match spec.family {
        KernelFamily::Linear => {
            let mut k = x.t_matmul(x);
            k.symmetrize();
            Ok(k)
        }
        KernelFamily::Rbf => {
            let sigma = spec.sigma()?;
            let scale = -1.0 / (2.0 * sigma * sigma);
            let n = x.cols();
            let mut k = DataMatrix::identity(n);
            for j in 0..n {
                for i in (j + 1)..n {
                    let v = libm::exp(scale * sq_dist(x.col(i), x.col(j)));
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
            Ok(k)
        }
    }
}

/// Kernel matrix plus the quantities every gradient step needs.
#[derive(Debug, Clone)]
pub struct GradContext {
    /// RBF kernel matrix `K`.
    pub kernel: DataMatrix,
    /// `H = (p/2)·K^{p/2−1} ⊙ K`.
    pub h: DataMatrix,
    /// Mean of the entries of `B·H` (`B` all-ones), i.e. `(1/n)·Σᵢⱼ Hᵢⱼ`.
    pub rho: f64,
    /// `tr(K^{p/2})`, evaluated without the eigenvalue floor.
    pub trace: f64,
    pub sigma: f64,
    pub schatten_p: f64,
}

/// Builds `K`, `H` and `ρ` for an RBF kernel.
///
/// `rel_floor` clamps eigenvalues of `K` below `rel_floor · w_max` before the
/// negative power `p/2 − 1` is taken (see [`crate::linalg::DEFAULT_EIG_FLOOR`]).
pub fn grad_context(x: &DataMatrix, spec: &KernelSpec, rel_floor: f64) -> Result<GradContext> {
    let sigma = spec.sigma()?;
    let kernel = kernel_matrix(x, spec)?;
    let eig = sym_eig(&kernel)?;
    context_from_eig(kernel, &eig, sigma, spec.schatten_p, rel_floor)
}

pub(crate) fn context_from_eig(
    kernel: DataMatrix,
    eig: &SymEig,
    sigma: f64,
    p: f64,
    rel_floor: f64,
) -> Result<GradContext> {
    let n = kernel.rows();
    let floor = rel_floor * eig.max_value().max(0.0);
    let trace = eig.power_trace(p / 2.0, 0.0)?;
    let inv_root = eig.power(p / 2.0 - 1.0, floor)?;
    let mut h = inv_root.hadamard(&kernel);
    for v in h.as_mut_slice() {
        *v *= p / 2.0;
    }
    h.symmetrize();
    let rho = h.sum() / n as f64;
    Ok(GradContext { kernel, h, rho, trace, sigma, schatten_p: p })
}

/// `tr(K^{p/2})` for the kernel matrix of `x`.
pub fn kernel_trace(x: &DataMatrix, spec: &KernelSpec) -> Result<f64> {
    let k = kernel_matrix(x, spec)?;
    let w = sym_eigvals(&k)?;
    Ok(clamped_powers(&w, spec.schatten_p / 2.0, 0.0)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_EIG_FLOOR;

    #[test]
    fn heuristic_two_points() {
        let x = DataMatrix::from_rows(&[&[0.0, 2.0]]);
        assert_eq!(bandwidth_heuristic(&x, 1.0).unwrap(), 1.0);
        assert_eq!(bandwidth_heuristic(&x, 2.0).unwrap(), 2.0);
    }

    #[test]
    fn heuristic_rejects_identical_columns() {
        let x = DataMatrix::filled(3, 4, 1.5);
        assert!(matches!(bandwidth_heuristic(&x, 1.0), Err(Error::DegenerateData(_))));
        assert!(bandwidth_heuristic(&DataMatrix::zeros(3, 1), 1.0).is_err());
    }

    #[test]
    fn rbf_entries() {
        let sigma = 0.7;
        let x = DataMatrix::from_rows(&[&[0.0, sigma * core::f64::consts::SQRT_2, 0.0]]);
        let k = kernel_matrix(&x, &KernelSpec::rbf_with_sigma(sigma)).unwrap();
        assert!(k.diag().iter().all(|&v| v == 1.0));
        assert!((k[(0, 1)] - libm::exp(-1.0)).abs() < 1e-15);
        assert_eq!(k[(0, 2)], 1.0);
    }

    #[test]
    fn unresolved_sigma_is_an_error() {
        let x = DataMatrix::from_rows(&[&[0.0, 1.0]]);
        assert!(kernel_matrix(&x, &KernelSpec::rbf(1.0)).is_err());
        let spec = KernelSpec::rbf(1.0).resolve(&x).unwrap();
        assert_eq!(spec.sigma, Some(0.5));
    }

    #[test]
    fn invalid_specs() {
        assert!(KernelSpec::rbf(1.0).with_schatten_p(0.0).validate().is_err());
        assert!(KernelSpec::rbf(1.0).with_schatten_p(1.5).validate().is_err());
        assert!(KernelSpec::rbf(-1.0).validate().is_err());
        assert!(KernelSpec::rbf_with_sigma(0.0).validate().is_err());
    }

    #[test]
    fn single_sample_context() {
        let x = DataMatrix::from_rows(&[&[3.0], &[1.0]]);
        for p in [1.0, 0.5] {
            let spec = KernelSpec::rbf_with_sigma(1.0).with_schatten_p(p);
            let ctx = grad_context(&x, &spec, DEFAULT_EIG_FLOOR).unwrap();
            assert_eq!(ctx.kernel[(0, 0)], 1.0);
            assert!((ctx.h[(0, 0)] - p / 2.0).abs() < 1e-15);
            assert!((ctx.rho - p / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn far_apart_samples_give_identity_context() {
        let n = 4;
        let x = DataMatrix::from_fn(1, n, |_, j| 1e3 * j as f64);
        let ctx = grad_context(&x, &KernelSpec::rbf_with_sigma(1.0), DEFAULT_EIG_FLOOR).unwrap();
        assert!((&ctx.h - &(&DataMatrix::identity(n) * 0.5)).max_abs() < 1e-15);
        assert!((ctx.rho - 0.5).abs() < 1e-15);
        assert!((ctx.trace - n as f64).abs() < 1e-12);
    }

    #[test]
    fn linear_context_is_rejected() {
        let x = DataMatrix::identity(2);
        assert!(grad_context(&x, &KernelSpec::linear(), DEFAULT_EIG_FLOOR).is_err());
    }
}
