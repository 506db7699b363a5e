//! Signed particles with singular pairwise interactions, annihilating on
//! collision, together with solvers for their continuum Hamilton–Jacobi limits.
//!
//! Modules:
//! - [`potentials`]: interaction potentials, scaling regimes, mobilities and assumption audits;
//! - [`dynamics`]: the particle ODE with collision detection and annihilation;
//! - [`staircase`]: the empirical primitive `u_n` and the quantizer `E_ε`;
//! - [`hamiltonians`]: the quantized nonlocal operators and their numerical checks;
//! - [`pde`]: monotone schemes for the limit equations;
//! - [`harness`]: configuration, experiments and reports.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod harness;
pub mod pde;
pub mod potentials;
pub mod quad;
pub mod staircase;

pub use error::{Error, Result};
