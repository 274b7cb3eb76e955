//! Approximation of Mercer eigensystems of positive definite kernels on
//! compact domains from point-based kernel-translate subspaces.
//!
//! The crate offers two constructions of the discrete eigenbasis of a space
//! spanned by kernel translates:
//!
//! * [`eigensolve::eigs_direct`] simultaneously diagonalizes the kernel matrix and the
//!   L2 Gramian of the translates,
//! * [`eigensolve::eigs_newton`] diagonalizes the L2 Gramian of a Newton basis whose
//!   points are chosen greedily by [`newton::greedy_select`].
//!
//! [`experiments`] reproduces the Matérn decay-rate and Brownian bridge studies
//! and emits CSV reports.

pub mod discrete_l2;
pub mod eigensolve;
pub mod error;
pub mod experiments;
pub mod kernels;
mod linalg;
pub mod newton;
pub mod pointsets;

pub use discrete_l2::{
    assemble_pencil, discrete_inner, newton_l2_gramian, GramianMode, GramianPair,
};
pub use eigensolve::{
    eigs_direct, eigs_newton, eval_eigenfunction, simultaneous_diagonalize, EigenApproximation,
    Method,
};
pub use error::{Error, Result};
pub use kernels::{
    bb_eigenvalue, bb_eval, bb_squared_kernel_eval, kernel_trace, matern_eval, BrownianBridgeSpec,
    Domain, Kernel, MaternSpec, ZooKernel,
};
pub use newton::{greedy_select, power_l2_norm, Criterion, NewtonBasis};
pub use pointsets::{disk_grid, fill_distance, random_interval_points, QuadratureSet};
