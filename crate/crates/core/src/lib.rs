//! Gradient-flow linear programming on Gaussian random instances.
//!
//! The crate is organised bottom-up:
//!
//! - [`rng`] and [`linalg`]: a bit-reproducible normal stream and the small
//!   dense kernels (LU with partial pivoting) everything else is built on.
//! - [`ensemble`]: draws of `(A, b, c)` with i.i.d. `N(0, sigma^2)` entries.
//! - [`simplex`]: a dense Bland-rule simplex oracle for the optimal vertex,
//!   plus strictly interior starting points.
//! - [`observables`]: convergence rates, barriers and computation time of
//!   one instance relative to a partition of its columns.
//! - [`flow`]: numerical integration of `dx/dt = grad h(x)` with runtime
//!   checks of the closed-form solution.
//! - [`analytics`]: closed-form asymptotic laws (scaling CDF, `erfcx`,
//!   spectral density, vertex-norm laws).
//! - [`harness`]: Monte Carlo experiments, empirical CDFs, KS distances and
//!   report files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod ensemble;
mod error;
pub mod flow;
pub mod harness;
pub mod linalg;
pub mod observables;
pub mod rng;
pub mod simplex;

pub use error::{Error, Result};
