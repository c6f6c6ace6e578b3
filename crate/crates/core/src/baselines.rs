//! Linear baselines: truncated-SVD PCA and convex RPCA.

use alloc::format;
use alloc::vec::Vec;

use crate::linalg::{spectral_norm, svd};
use crate::solvers::{relative_residual, shrink, DecompositionResult, SolverKind};
use crate::{DataMatrix, Error, Result};

/// Settings for the inexact augmented Lagrangian RPCA solver.
#[derive(Debug, Clone, PartialEq)]
pub struct RpcaConfig {
    /// Weight of `‖E‖₁`; `None` means `1/√max(d, n)`.
    pub lambda: Option<f64>,
    /// Initial penalty; `None` means `1.25/‖M‖₂`.
    pub mu: Option<f64>,
    /// Penalty growth per iteration.
    pub rho_growth: f64,
    /// Stop when `‖M − X − E‖_F / ‖M‖_F < eps`.
    pub eps: f64,
    pub t_max: usize,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        RpcaConfig { lambda: None, mu: None, rho_growth: 1.5, eps: 1e-7, t_max: 1000 }
    }
}

impl RpcaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("mu", self.mu)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
                }
            }
        }
        if !(self.rho_growth > 1.0) {
            return Err(Error::invalid("rho_growth must be > 1"));
        }
        if !(self.eps > 0.0) || self.t_max == 0 {
            return Err(Error::invalid("eps must be > 0 and t_max at least 1"));
        }
        Ok(())
    }

    pub fn resolved_lambda(&self, m: &DataMatrix) -> f64 {
        self.lambda
            .unwrap_or_else(|| 1.0 / libm::sqrt(m.rows().max(m.cols()) as f64))
    }
}

/// Best rank-`r` approximation `U_r S_r V_rᵀ`.
pub fn pca_denoise(m: &DataMatrix, r: usize) -> Result<DataMatrix> {
    let k = m.rows().min(m.cols());
    if r == 0 || r > k {
        return Err(Error::invalid(format!("PCA rank {r} outside 1..={k}")));
    }
    let s = svd(m)?;
    Ok(s.recompose(|i, v| if i < r { v } else { 0.0 }))
}

/// PCA with the rank that minimizes the error against `truth`.
///
/// This is the most favourable rank choice for the baseline; it needs the
/// clean matrix and so only makes sense on synthetic data.
pub fn pca_best_rank(m: &DataMatrix, truth: &DataMatrix) -> Result<(usize, DataMatrix)> {
    m.check_same_shape(truth, "truth")?;
    let s = svd(m)?;
    let mut best: Option<(f64, usize, DataMatrix)> = None;
    for r in 1..=m.rows().min(m.cols()) {
        let approx = s.recompose(|i, v| if i < r { v } else { 0.0 });
        let err = (&approx - truth).frobenius_norm();
        if best.as_ref().map_or(true, |(b, _, _)| err < *b) {
            best = Some((err, r, approx));
        }
    }
    let (_, r, approx) = best.expect("at least one rank");
    Ok((r, approx))
}

/// Singular value thresholding `U·Θ_τ(S)·Vᵀ`, the prox of `τ‖·‖_*`.
pub fn svt(a: &DataMatrix, tau: f64) -> Result<DataMatrix> {
    Ok(svt_with_norm(a, tau)?.0)
}

/// [`svt`] plus the nuclear norm of its output.
fn svt_with_norm(a: &DataMatrix, tau: f64) -> Result<(DataMatrix, f64)> {
    if !(tau >= 0.0) {
        return Err(Error::invalid("SVT threshold must be >= 0"));
    }
    let s = svd(a)?;
    let nuclear: f64 = s.s.iter().map(|&v| (v - tau).max(0.0)).sum();
    Ok((s.recompose(|_, v| (v - tau).max(0.0)), nuclear))
}

/// Convex RPCA, `min ‖X‖_* + λ‖E‖₁ s.t. X + E = M`, by inexact ALM.
///
/// Running out of iterations is not an error: the last iterate is returned
/// with `converged = false`.
pub fn solve_rpca(m: &DataMatrix, cfg: &RpcaConfig) -> Result<DecompositionResult> {
    cfg.validate()?;
    m.check_finite()?;
    let lambda = cfg.resolved_lambda(m);
    let m_norm = m.frobenius_norm();
    if m_norm == 0.0 {
        return Ok(DecompositionResult {
            x: m.clone(),
            e: m.clone(),
            objective_trace: Vec::new(),
            iterations: 0,
            converged: true,
            solver: SolverKind::Rpca,
            lambda,
            sigma: None,
            final_objective: 0.0,
            residual: 0.0,
            last_omega_increase: None,
            final_omega: None,
            line_search: Vec::new(),
        });
    }

    let norm_two = spectral_norm(m)?;
    let dual_scale = norm_two.max(m.max_abs() / lambda);
    let mut y = m * (1.0 / dual_scale);
    let mut mu = cfg.mu.unwrap_or(1.25 / norm_two);
    let mu_max = mu * 1e7;

    let mut x = DataMatrix::zeros(m.rows(), m.cols());
    let mut e = DataMatrix::zeros(m.rows(), m.cols());
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut objective = 0.0;

    for t in 1..=cfg.t_max {
        iterations = t;
        let mut target = m - &e;
        target.axpy(1.0 / mu, &y);
        let (x_next, nuclear) = svt_with_norm(&target, 1.0 / mu)?;
        x = x_next;

        let mut target = m - &x;
        target.axpy(1.0 / mu, &y);
        let tau = lambda / mu;
        e = target.map(|v| shrink(v, tau));

        let mut z = m - &x;
        z.axpy(-1.0, &e);
        y.axpy(mu, &z);
        mu = (mu * cfg.rho_growth).min(mu_max);

        objective = nuclear + lambda * e.l1_norm();
        if !objective.is_finite() {
            return Err(Error::numerical("RPCA objective became non-finite"));
        }
        trace.push(objective);
        if z.frobenius_norm() / m_norm < cfg.eps {
            converged = true;
            break;
        }
    }

    let residual = relative_residual(m, &x, &e, m_norm);
    Ok(DecompositionResult {
        x,
        e,
        objective_trace: trace,
        iterations,
        converged,
        solver: SolverKind::Rpca,
        lambda,
        sigma: None,
        final_objective: objective,
        residual,
        last_omega_increase: None,
        final_omega: None,
        line_search: Vec::new(),
    })
}
