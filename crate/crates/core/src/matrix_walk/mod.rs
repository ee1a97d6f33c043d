//! Sampling of the step law, matrix arithmetic, projective action and
//! log-space accumulation of the norm cocycle along trajectories.

mod element;
mod matrix;
mod measure;
mod projective;
mod stream;
mod walk;

pub use element::{GroupElement, PolarFactors};
pub use matrix::{SquareMatrix, Svd, Vector, MIN_CONDITION_RATIO};
pub use measure::{uniform_orthogonal, MeasureFamily, MeasureSpec, ScalarLaw};
pub use projective::{direction_grid, ProjectivePoint, SIGN_THRESHOLD};
pub use stream::{RngStream, AUX_DOMAIN};
pub use walk::{act, big_n, cocycle_sigma, operator_norm, run_walk, sample_matrix, walk_each, WalkPath};
