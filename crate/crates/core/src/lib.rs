//! Numerical detection and classification of threshold virtual levels of
//! Schrödinger-type operators, and limiting-absorption resolvent estimates in
//! weighted spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`weighted_space`]: grids, weights, operator norms.
//! * [`free_resolvent`]: closed-form free kernels in one, two and three
//!   dimensions and their structured (linear-cost) discretizations.
//! * [`jost`]: Jost solutions, Wronskians and Green kernels in 1D.
//! * [`lap_sweep`]: resolvent-norm sweeps toward a threshold and the
//!   regular/virtual classifier.
//! * [`perturbation`]: bifurcation of eigenvalues from thresholds and
//!   finite-rank regularization.
//! * [`discrete_ops`]: the left shift on `l^2(N)`.
//! * [`criticality`]: null states versus weighted spectral gaps.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criticality;
pub mod discrete_ops;
pub mod error;
pub mod free_resolvent;
pub mod jost;
pub mod lap_sweep;
pub mod linalg;
pub mod output;
pub mod perturbation;
pub mod potential;
pub mod report;
pub mod special;
pub mod weighted_space;

pub use error::{Error, Result};
pub use num_complex::Complex64;
