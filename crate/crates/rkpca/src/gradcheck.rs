//! Finite-difference check of the analytic trace-term gradients.

use rkpca_core::kernel::{kernel_trace, KernelSpec};
use rkpca_core::objective::{fd_check, grad_wrt_e, grad_wrt_x};
use rkpca_core::synth::{gen_synthetic, inject_noise, split_seed, NoiseSpec, SynthSpec};

use crate::error::CliResult;

/// Largest accepted relative gradient error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-3;
/// Central-difference step.
pub const GRADCHECK_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckOptions {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub beta: f64,
    pub schatten_p: f64,
    /// Perturb the analytic gradients so the check must fail.
    pub sabotage: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions { d: 10, n: 30, seed: 0, beta: 1.0, schatten_p: 1.0, sabotage: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GradcheckReport {
    /// Error of `∂tr/∂X`.
    pub err_x: f64,
    /// Error of `∂tr/∂E` through `X = M − E`.
    pub err_e: f64,
    pub sigma: f64,
}

impl GradcheckReport {
    pub fn max_error(&self) -> f64 {
        self.err_x.max(self.err_e)
    }

    pub fn passed(&self) -> bool {
        self.max_error() < GRADCHECK_TOLERANCE
    }
}

/// Checks both gradients on a seeded synthetic instance.
///
/// The clean matrix comes from the synthetic generator with latent
/// dimension 2 (1 when `d` is 2 or less); `E` is 30% sparse Gaussian
/// noise. With fewer than two samples the bandwidth heuristic is undefined
/// and `σ = 1` is used.
pub fn gradcheck(opts: &GradcheckOptions) -> CliResult<GradcheckReport> {
    let r = if opts.d > 2 { 2 } else { 1 };
    let spec = SynthSpec { d: opts.d, r, n: opts.n, subspaces: 1, seed: split_seed(opts.seed, 0) };
    let (x, _) = gen_synthetic(&spec)?;
    let (m, _) = inject_noise(&x, &NoiseSpec::sparse_gaussian(0.3), split_seed(opts.seed, 1))?;
    let e = &m - &x;

    let kernel = if opts.n >= 2 {
        KernelSpec::rbf(opts.beta).with_schatten_p(opts.schatten_p).resolve(&x)?
    } else {
        KernelSpec::rbf_with_sigma(1.0).with_schatten_p(opts.schatten_p)
    };
    kernel.validate()?;
    let sigma = kernel.sigma()?;
    let sabotage = |mut g: rkpca_core::DataMatrix| {
        if opts.sabotage {
            g.as_mut_slice().iter_mut().for_each(|v| *v *= 1.05);
            if let Some(first) = g.as_mut_slice().first_mut() {
                *first += 1.0;
            }
        }
        g
    };

    let gx = sabotage(grad_wrt_x(&x, &kernel)?);
    let mut failure = None;
    let err_x = fd_check(
        |p| kernel_trace(p, &kernel).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            f64::NAN
        }),
        &gx,
        &x,
        GRADCHECK_STEP,
    );
    let ge = sabotage(grad_wrt_e(&m, &e, &kernel)?);
    let err_e = fd_check(
        |p| kernel_trace(&(&m - p), &kernel).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            f64::NAN
        }),
        &ge,
        &e,
        GRADCHECK_STEP,
    );
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(GradcheckReport { err_x, err_e, sigma })
}
