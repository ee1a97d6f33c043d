//! Monte Carlo laboratory for left random walks on `GL_d(R)`.
//!
//! * [`matrix_walk`]: step laws, projective action, cocycle trajectories.
//! * [`cocycle`]: Lyapunov exponent, variance, invariant-measure and Gordin diagnostics.
//! * [`coboundary`]: Poisson equation and martingale-coboundary extraction.
//! * [`mg_tools`]: explicit martingale inequalities and finite-space oracles.
//! * [`deviation_lab`]: tail probabilities, rate fits, series and MDP diagnostics.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coboundary;
pub mod deviation_lab;
pub mod cocycle;
pub mod error;
pub mod matrix_walk;
pub mod mg_tools;
pub mod parallel;
pub mod stats;

pub use error::{LabError, Result};
pub use matrix_walk::{GroupElement, MeasureFamily, MeasureSpec, ProjectivePoint, RngStream, ScalarLaw, SquareMatrix, WalkPath};
