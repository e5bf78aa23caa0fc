//! Entropy reduction and entanglement-assisted classical capacity of bosonic
//! Gaussian measurement channels.
//!
//! - [`matfun`]: spectral calculus, the entropy function `g`, symplectic spectra.
//! - [`gauge`]: closed forms for gauge-covariant Gaussian measurements.
//! - [`symplectic`]: general Gaussian measurements in real phase-space form.
//! - [`capacity`]: one-mode capacities, gain, and the multimode maximization.
//! - [`fock`]: truncated Fock-space oracle that evaluates the same quantities
//!   by brute force.
//! - [`verify`]: randomized verification suites that pit the two against each other.

// NaN must fail range checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod error;
pub mod fock;
pub mod exec;
pub mod gauge;
pub mod matfun;
pub mod symplectic;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use matfun::{CMatrix, HermitianMatrix, LogBase, RMatrix};
