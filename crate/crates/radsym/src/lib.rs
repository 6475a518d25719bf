//! Radiation-flux symmetry analysis for cylinder-to-sphere cavity models.
//!
//! The crate computes the X-ray flux distribution inside a cylindrical
//! cavity enclosing a spherical capsule by solving the nonlinear
//! view-factor energy balance, two ways:
//!
//! - **dense baselines** — Newton–Raphson with a direct solve, and an
//!   inexact Newton variant with a Jacobi-preconditioned conjugate-gradient
//!   inner solver;
//! - **sparse reconstruction** — the flux is expanded over orthogonal
//!   polynomial bases (spherical harmonics on the capsule, annular Zernike
//!   polynomials on the end faces, Legendre–Fourier polynomials on the
//!   wall), only a Latin-hypercube sample of the equations is evaluated,
//!   and the sparse coefficients are recovered by greedy solvers (IHT,
//!   NIHT, CGIHT, SP, CGSTP) inside an outer relinearization loop.
//!
//! The `harness` module provides model presets, a benchmark pipeline
//! comparing the solvers on accuracy, iteration counts and runtime, and the
//! sparsity/asymmetry analyses; the `radsym` binary exposes all of it as a
//! CLI. Start from the crate examples for runnable walkthroughs of each
//! capability.

extern crate blas_src;

pub mod balance;
pub mod basis;
pub mod error;
pub mod geom;
pub mod harness;
pub mod io;
pub mod mesh;
pub mod sampling;
pub mod solvers;
pub mod viewfactor;

pub use error::{Error, Result};
