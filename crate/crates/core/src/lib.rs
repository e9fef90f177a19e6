//! Security analysis of two-way continuous-variable QKD with coherent states
//! under general two-mode Gaussian attacks, in reverse reconciliation.
//!
//! The crate is `no_std` (it needs `alloc`) and has no IO. It is organised
//! bottom-up:
//!
//! * [`linalg`]: a small dense matrix type and a cyclic Jacobi eigensolver.
//! * [`gaussian`]: covariance matrices, symplectic maps, Williamson
//!   decomposition, purification, heterodyne dilation, Gaussian conditioning
//!   and von Neumann entropies.
//! * [`attack`]: the two-mode attack plane (physicality, separability,
//!   boundary search and explicit dilations).
//! * [`protocol`]: the two-way protocol state, mutual information, Holevo
//!   bound and key rate, plus a one-way baseline.
//! * [`analysis`]: correlation-plane sweeps, worst-case attack search and
//!   tolerable-noise frontiers.
//!
//! All quantities use shot-noise units (vacuum variance 1) and interleaved
//! quadrature ordering `(x1, p1, x2, p2, ...)`.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod attack;
mod error;
pub mod gaussian;
pub mod linalg;
pub mod protocol;

pub use error::{Error, Result};
