//! Solvers for complex image reconstruction with separate regularization of
//! the image magnitude and phase.
//!
//! The optimization problem is `min_{m, q} 1/2 ||A(m .* q) - b||^2 + R1(m) +
//! R2(q)` over real magnitudes `m` and unit-modulus exponentiated phases
//! `q = e^{ip}`. Four solvers are provided:
//!
//! * [`solvers::run_palm`] — proximal alternating linearized minimization,
//! * [`solvers::run_palm_ut`] — PALM with uncoupled coordinatewise step sizes
//!   for the phase block,
//! * [`solvers::run_palmnut`] — uncoupled step sizes plus Nesterov momentum,
//! * [`solvers::run_am_ncg`] — an alternating-minimization baseline with
//!   Polak-Ribiere nonlinear conjugate gradients.
//!
//! Supporting modules: linear [`operators`] (identity, diagonal, masked DFT,
//! SENSE, finite differences, Daubechies-4 wavelets, composition/stacking),
//! [`regularizers`] (Huber stacks, Tikhonov, l1 on a unitary transform, and
//! their proximal operators), [`problem`] (objective, gradients, and scalar or
//! coordinatewise Lipschitz-style step-size bounds), [`phantom`] (synthetic
//! ground truth, sampling masks, noise, NRMSE), [`io`] (portable vector files,
//! trace CSVs, PGM export), and [`experiments`] (the scenario harness behind
//! the CLI).
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod error;
pub mod experiments;
pub mod io;
pub mod operators;
pub mod phantom;
pub mod problem;
pub mod regularizers;
pub mod rng;
pub mod solvers;
pub mod vector;
pub mod wavelet;

pub use error::{Error, Result};
pub use vector::{complex_exp, ComplexVector, RealVector};
