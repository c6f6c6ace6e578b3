//! Robust kernel principal component analysis.
//!
//! A corrupted data matrix `M` (columns are samples) is split into a clean
//! part `X` and a sparse error `E` by minimizing
//!
//! ```text
//! tr(K^{p/2}) + λ‖E‖₁   subject to   X + E = M
//! ```
//!
//! where `K` is the RBF kernel matrix of the columns of `X`. With `p = 1`
//! the trace term is the nuclear norm of the data in feature space, so the
//! clean part may be high- or even full-rank as long as it lies near a
//! low-dimensional nonlinear manifold.
//!
//! The crate is `no_std` (it needs `alloc`) and contains all of the
//! numerics: dense symmetric linear algebra ([`linalg`]), kernel assembly
//! ([`kernel`]), the objective and its gradients ([`objective`]), the two
//! nonconvex solvers ([`solvers`]), the PCA/RPCA baselines ([`baselines`]),
//! robust subspace clustering ([`cluster`]) and synthetic data, noise and
//! error metrics ([`synth`]).

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod baselines;
pub mod cluster;
mod error;
pub mod kernel;
pub mod linalg;
mod matrix;
pub mod objective;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::DataMatrix;
