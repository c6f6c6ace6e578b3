//! Nonconvex solvers for `min tr(K^{p/2}) + λ‖E‖₁  s.t.  X + E = M`.
//!
//! * [`solve_admm_btls`]: ADMM on the augmented Lagrangian. The `X` block
//!   takes one gradient step per outer iteration, with a backtracking line
//!   search enforcing sufficient decrease; `E` has a closed-form
//!   soft-thresholding update.
//! * [`solve_plm_adss`]: eliminates `X = M − E` and runs a proximal
//!   linearized method on `E`. The step is `1/ν` with `ν = ω·L̂`, and `ω`
//!   grows by a constant factor whenever the objective goes up.
//!
//! Both estimate the gradient's Lipschitz constant as
//! `‖(2/σ²)(H − ρI) + μI‖₂`, reading the scalar `ρ` in `H − ρ` as `ρI`.

use alloc::format;
use alloc::vec::Vec;

use crate::kernel::{context_from_eig, kernel_matrix, GradContext, KernelFamily, KernelSpec};
use crate::linalg::{clamped_powers, spectral_norm, sym_eig, sym_eigvals, DEFAULT_EIG_FLOOR};
use crate::objective::trace_gradient;
use crate::{DataMatrix, Error, Result};

/// Which method produced a [`DecompositionResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    AdmmBtls,
    PlmAdss,
    Rpca,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::AdmmBtls => "rkpca-admm",
            SolverKind::PlmAdss => "rkpca-plm",
            SolverKind::Rpca => "rpca",
        }
    }
}

/// Hyperparameters shared by both RKPCA solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// `λ = n·λ₀/‖M‖₁` unless [`SolverConfig::lambda`] overrides it.
    pub lambda0: f64,
    pub lambda: Option<f64>,
    /// ADMM penalty `μ = mu_factor · λ`.
    pub mu_factor: f64,
    /// ADMM initial step `η₀ = eta0_factor / L_J`.
    pub eta0_factor: f64,
    /// Line-search shrink factor.
    pub btls_c: f64,
    /// Armijo sufficient-decrease constant.
    pub btls_gamma: f64,
    pub btls_max_halvings: u32,
    /// PLM initial step multiplier `ω`.
    pub omega0: f64,
    /// PLM growth factor for `ω`.
    pub omega_c: f64,
    /// Convergence tolerance; `None` picks 1e-6 for ADMM and 1e-4 for PLM.
    pub eps: Option<f64>,
    pub t_max: usize,
    /// Relative eigenvalue floor for `K^{p/2−1}`.
    pub eig_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda0: 0.5,
            lambda: None,
            mu_factor: 10.0,
            eta0_factor: 10.0,
            btls_c: 0.5,
            btls_gamma: 0.1,
            btls_max_halvings: 40,
            omega0: 0.1,
            omega_c: 2.0,
            eps: None,
            t_max: 300,
            eig_floor: DEFAULT_EIG_FLOOR,
        }
    }
}

pub const ADMM_DEFAULT_EPS: f64 = 1e-6;
pub const PLM_DEFAULT_EPS: f64 = 1e-4;

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda0", self.lambda0),
            ("mu_factor", self.mu_factor),
            ("eta0_factor", self.eta0_factor),
            ("omega0", self.omega0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("lambda must be > 0, got {l}")));
            }
        }
        for (name, v) in [("btls_c", self.btls_c), ("btls_gamma", self.btls_gamma)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.omega_c > 1.0 && self.omega_c.is_finite()) {
            return Err(Error::invalid(format!("omega_c must be > 1, got {}", self.omega_c)));
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0) {
                return Err(Error::invalid(format!("eps must be > 0, got {eps}")));
            }
        }
        if self.t_max == 0 {
            return Err(Error::invalid("t_max must be at least 1"));
        }
        if !(self.eig_floor > 0.0 && self.eig_floor < 1.0) {
            return Err(Error::invalid("eig_floor must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// One accepted ADMM line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchRecord {
    pub eta: f64,
    pub halvings: u32,
    /// `J(X)` before the step.
    pub before: f64,
    /// `J(X − η∇)` at the accepted step.
    pub after: f64,
    /// `‖∇J‖²_F`.
    pub grad_norm_sq: f64,
}

impl LineSearchRecord {
    /// Whether the step satisfies `J(X − η∇) ≤ J(X) − γη‖∇‖²`.
    pub fn satisfies_armijo(&self, gamma: f64) -> bool {
        self.after <= self.before - gamma * self.eta * self.grad_norm_sq
    }
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub x: DataMatrix,
    pub e: DataMatrix,
    /// ADMM: augmented Lagrangian after each outer iteration. PLM: objective
    /// `J(E⁽ᵗ⁾)` after each iteration. RPCA: `‖X‖_* + λ‖E‖₁`.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub solver: SolverKind,
    pub lambda: f64,
    /// RBF bandwidth used, when a kernel was involved.
    pub sigma: Option<f64>,
    /// `tr(K(X)^{p/2}) + λ‖E‖₁` at the returned point (`‖X‖_* + λ‖E‖₁` for RPCA).
    pub final_objective: f64,
    /// `‖X + E − M‖_F / ‖M‖_F`.
    pub residual: f64,
    /// PLM: iteration of the last `ω` increase (1-based), if any.
    pub last_omega_increase: Option<usize>,
    pub final_omega: Option<f64>,
    /// ADMM: one record per outer iteration.
    pub line_search: Vec<LineSearchRecord>,
}

/// Elementwise `sign(u)·max(|u| − τ, 0)`.
pub fn soft_threshold(u: &DataMatrix, tau: f64) -> DataMatrix {
    assert!(tau >= 0.0, "threshold must be non-negative");
    u.map(|v| shrink(v, tau))
}

#[inline]
pub(crate) fn shrink(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// `λ = n·λ₀ / ‖M‖₁`.
pub fn lambda_heuristic(m: &DataMatrix, lambda0: f64) -> Result<f64> {
    let l1 = m.l1_norm();
    if l1 == 0.0 {
        return Err(Error::invalid("lambda heuristic needs a nonzero data matrix"));
    }
    Ok(m.cols() as f64 * lambda0 / l1)
}

/// `‖(2/σ²)(H − ρI) + μI‖₂`; `mu = 0` gives the PLM estimate.
pub fn lipschitz_estimate(ctx: &GradContext, sigma: f64, mu: f64) -> Result<f64> {
    let scale = 2.0 / (sigma * sigma);
    let mut a = &ctx.h * scale;
    let shift = mu - scale * ctx.rho;
    for i in 0..a.rows() {
        a[(i, i)] += shift;
    }
    spectral_norm(&a)
}

struct Prepared {
    spec: KernelSpec,
    sigma: f64,
    lambda: f64,
    m_norm: f64,
}

fn prepare(m: &DataMatrix, spec: &KernelSpec, cfg: &SolverConfig) -> Result<Prepared> {
    cfg.validate()?;
    m.check_finite()?;
    if spec.family != KernelFamily::Rbf {
        return Err(Error::invalid("RKPCA solvers need an RBF kernel"));
    }
    let spec = spec.resolve(m)?;
    let sigma = spec.sigma()?;
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => lambda_heuristic(m, cfg.lambda0)?,
    };
    let m_norm = m.frobenius_norm();
    Ok(Prepared { spec, sigma, lambda, m_norm })
}

/// Kernel, eigendecomposition and gradient context at `x`.
fn context_at(x: &DataMatrix, p: &Prepared, floor: f64) -> Result<GradContext> {
    let k = kernel_matrix(x, &p.spec)?;
    let eig = sym_eig(&k)?;
    context_from_eig(k, &eig, p.sigma, p.spec.schatten_p, floor)
}

fn trace_at(x: &DataMatrix, p: &Prepared) -> Result<f64> {
    let k = kernel_matrix(x, &p.spec)?;
    let w = sym_eigvals(&k)?;
    Ok(clamped_powers(&w, p.spec.schatten_p / 2.0, 0.0)?.iter().sum())
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numerical(format!("{what} became non-finite")))
    }
}

/// ADMM with a backtracking line search on the `X` block.
///
/// Starts from `X = M`, `E = 0`, `Q = 0`. Stops when the relative change of
/// the augmented Lagrangian between outer iterations drops below `eps`.
pub fn solve_admm_btls(
    m: &DataMatrix,
    spec: &KernelSpec,
    cfg: &SolverConfig,
) -> Result<DecompositionResult> {
    let prep = prepare(m, spec, cfg)?;
    let eps = cfg.eps.unwrap_or(ADMM_DEFAULT_EPS);
    let lambda = prep.lambda;
    let mu = cfg.mu_factor * lambda;
    let tau = lambda / mu;

    let mut x = m.clone();
    let mut e = DataMatrix::zeros(m.rows(), m.cols());
    let mut q = DataMatrix::zeros(m.rows(), m.cols());
    let mut ctx = context_at(&x, &prep, cfg.eig_floor)?;
    let mut lagrangian_prev = finite(ctx.trace, "augmented Lagrangian")?;

    let mut trace = Vec::new();
    let mut line_search = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=cfg.t_max {
        iterations = t;
        // J(X) = tr(K^{p/2}) + (μ/2)‖X + E − M + Q/μ‖²
        let shift = {
            let mut s = &e - m;
            s.axpy(1.0 / mu, &q);
            s
        };
        let penalty_at = |x: &DataMatrix| 0.5 * mu * (x + &shift).frobenius_norm_sq();
        let mut grad = trace_gradient(&x, &ctx);
        grad.axpy(mu, &(&x + &shift));
        let grad_norm_sq = grad.frobenius_norm_sq();
        let before = ctx.trace + penalty_at(&x);

        let record = if grad_norm_sq == 0.0 {
            LineSearchRecord { eta: 0.0, halvings: 0, before, after: before, grad_norm_sq }
        } else {
            let l_j = lipschitz_estimate(&ctx, prep.sigma, mu)?;
            let mut eta = cfg.eta0_factor / l_j;
            let mut halvings = 0;
            loop {
                let mut trial = x.clone();
                trial.axpy(-eta, &grad);
                let after = trace_at(&trial, &prep)? + penalty_at(&trial);
                if after.is_finite() && after <= before - cfg.btls_gamma * eta * grad_norm_sq {
                    x = trial;
                    break LineSearchRecord { eta, halvings, before, after, grad_norm_sq };
                }
                if halvings == cfg.btls_max_halvings {
                    return Err(Error::StepSearchFailure(format!(
                        "no step satisfied the sufficient-decrease condition after {halvings} \
                         reductions at iteration {t} (eta0 = {:e}, J = {before:e}, \
                         |grad|^2 = {grad_norm_sq:e})",
                        cfg.eta0_factor / l_j
                    )));
                }
                eta *= cfg.btls_c;
                halvings += 1;
            }
        };
        line_search.push(record);

        // E = Θ_{λ/μ}(M − X − Q/μ)
        let mut target = m - &x;
        target.axpy(-1.0 / mu, &q);
        e = soft_threshold(&target, tau);

        let mut residual = &x + &e;
        residual.axpy(-1.0, m);
        q.axpy(mu, &residual);

        ctx = context_at(&x, &prep, cfg.eig_floor)?;
        let lagrangian = ctx.trace
            + lambda * e.l1_norm()
            + dot_all(&residual, &q)
            + 0.5 * mu * residual.frobenius_norm_sq();
        let lagrangian = finite(lagrangian, "augmented Lagrangian")?;
        trace.push(lagrangian);

        let change = (lagrangian_prev - lagrangian).abs() / lagrangian_prev.abs().max(f64::MIN_POSITIVE);
        lagrangian_prev = lagrangian;
        if change < eps {
            converged = true;
            break;
        }
    }

    let final_objective = finite(ctx.trace + lambda * e.l1_norm(), "objective")?;
    let residual = relative_residual(m, &x, &e, prep.m_norm);
    Ok(DecompositionResult {
        x,
        e,
        objective_trace: trace,
        iterations,
        converged,
        solver: SolverKind::AdmmBtls,
        lambda,
        sigma: Some(prep.sigma),
        final_objective,
        residual,
        last_omega_increase: None,
        final_omega: None,
        line_search,
    })
}

/// Proximal linearized minimization over `E` with adaptive step size.
///
/// Starts from `E = 0`. Stops when `‖E⁽ᵗ⁾ − E⁽ᵗ⁻¹⁾‖_F / ‖M‖_F < eps`.
pub fn solve_plm_adss(
    m: &DataMatrix,
    spec: &KernelSpec,
    cfg: &SolverConfig,
) -> Result<DecompositionResult> {
    let prep = prepare(m, spec, cfg)?;
    let eps = cfg.eps.unwrap_or(PLM_DEFAULT_EPS);
    let lambda = prep.lambda;

    let mut e = DataMatrix::zeros(m.rows(), m.cols());
    let mut x = m.clone();
    let mut ctx = context_at(&x, &prep, cfg.eig_floor)?;
    let mut objective = finite(ctx.trace, "objective")?;
    let mut omega = cfg.omega0;
    let mut last_increase = None;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=cfg.t_max {
        iterations = t;
        // ∂J/∂E = −∂tr/∂X at X = M − E.
        let grad = -&trace_gradient(&x, &ctx);
        let l_hat = lipschitz_estimate(&ctx, prep.sigma, 0.0)?;
        if !(l_hat > 0.0) || grad.max_abs() == 0.0 {
            // The trace term is flat here, so the iterate is already stationary.
            converged = true;
            trace.push(objective);
            break;
        }
        let nu = omega * l_hat;
        let mut step = e.clone();
        step.axpy(-1.0 / nu, &grad);
        let e_next = soft_threshold(&step, lambda / nu);

        let x_next = m - &e_next;
        let ctx_next = context_at(&x_next, &prep, cfg.eig_floor)?;
        let objective_next = finite(ctx_next.trace + lambda * e_next.l1_norm(), "objective")?;
        if objective_next > objective {
            omega *= cfg.omega_c;
            last_increase = Some(t);
        }
        trace.push(objective_next);

        let delta = (&e_next - &e).frobenius_norm() / prep.m_norm;
        e = e_next;
        x = x_next;
        ctx = ctx_next;
        objective = objective_next;
        if delta < eps {
            converged = true;
            break;
        }
    }

    let residual = relative_residual(m, &x, &e, prep.m_norm);
    Ok(DecompositionResult {
        x,
        e,
        objective_trace: trace,
        iterations,
        converged,
        solver: SolverKind::PlmAdss,
        lambda,
        sigma: Some(prep.sigma),
        final_objective: objective,
        residual,
        last_omega_increase: last_increase,
        final_omega: Some(omega),
        line_search: Vec::new(),
    })
}

fn dot_all(a: &DataMatrix, b: &DataMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

pub(crate) fn relative_residual(m: &DataMatrix, x: &DataMatrix, e: &DataMatrix, m_norm: f64) -> f64 {
    let mut r = x + e;
    r.axpy(-1.0, m);
    if m_norm == 0.0 {
        r.frobenius_norm()
    } else {
        r.frobenius_norm() / m_norm
    }
}
