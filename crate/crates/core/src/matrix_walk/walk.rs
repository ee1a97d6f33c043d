use rand::Rng;

use super::element::GroupElement;
use super::matrix::SquareMatrix;
use super::measure::MeasureSpec;
use super::projective::ProjectivePoint;
use crate::error::{LabError, Result};

/// One trajectory of the projective chain with its cocycle increments.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    pub x0: ProjectivePoint,
    /// `X_k = sigma(Y_k, A_{k-1} x)`, k = 1..n.
    pub increments: Vec<f64>,
    /// `A_k . x`, k = 1..n.
    pub directions: Vec<ProjectivePoint>,
    /// `log N(Y_k)`, k = 1..n.
    pub log_big_n: Vec<f64>,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Running sums `log |A_k x|`, k = 1..n.
    pub fn partial_sums(&self) -> Vec<f64> {
        self.increments
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    /// Direction before step `k` (1-based): `A_{k-1} . x`.
    pub fn direction_before(&self, k: usize) -> &ProjectivePoint {
        if k == 1 {
            &self.x0
        } else {
            &self.directions[k - 2]
        }
    }
}

/// Largest singular value of `m`.
pub fn operator_norm(m: &SquareMatrix) -> Result<f64> {
    m.operator_norm()
}

/// `N(g) = max(|g|, |g^{-1}|)`.
pub fn big_n(m: &SquareMatrix) -> Result<f64> {
    m.big_n()
}

/// One draw from `spec`.
pub fn sample_matrix<R: Rng + ?Sized>(spec: &MeasureSpec, rng: &mut R) -> Result<GroupElement> {
    Ok(spec.sample(rng)?.into_owned())
}

/// Canonical point of `m . x`.
pub fn act(m: &SquareMatrix, x: &ProjectivePoint) -> Result<ProjectivePoint> {
    check_dim(m.dim(), x.dim())?;
    let y = m.apply(x.direction());
    ProjectivePoint::new(&y)
}

/// Norm cocycle `log |m x|` for the unit representative of `x`.
pub fn cocycle_sigma(m: &SquareMatrix, x: &ProjectivePoint) -> Result<f64> {
    check_dim(m.dim(), x.dim())?;
    Ok(m.apply(x.direction()).iter().map(|v| v * v).sum::<f64>().sqrt().ln())
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(LabError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Streams `n` steps of the chain started at `x0`, calling
/// `visit(k, increment, direction_after, log_big_n)` with `k` 1-based.
///
/// Only the current direction is kept; the product `A_k` is never formed.
#[inline]
pub fn walk_each<R, F>(spec: &MeasureSpec, x0: &ProjectivePoint, n: usize, rng: &mut R, mut visit: F) -> Result<()>
where
    R: Rng + ?Sized,
    F: FnMut(usize, f64, &ProjectivePoint, f64),
{
    check_dim(spec.dim(), x0.dim())?;
    let mut x = x0.clone();
    for k in 1..=n {
        let g = spec.sample(rng)?;
        let (inc, next) = g.step(&x);
        if !inc.is_finite() {
            return Err(LabError::NumericFailure { routine: "run_walk", iterations: k });
        }
        visit(k, inc, &next, g.log_big_n());
        x = next;
    }
    Ok(())
}

/// Runs one trajectory of length `n >= 1` and records it.
pub fn run_walk<R: Rng + ?Sized>(spec: &MeasureSpec, x0: &ProjectivePoint, n: usize, rng: &mut R) -> Result<WalkPath> {
    if n == 0 {
        return Err(LabError::Domain("walk length must be at least 1".into()));
    }
    let mut path = WalkPath {
        x0: x0.clone(),
        increments: Vec::with_capacity(n),
        directions: Vec::with_capacity(n),
        log_big_n: Vec::with_capacity(n),
    };
    walk_each(spec, x0, n, rng, |_, inc, dir, ln| {
        path.increments.push(inc);
        path.directions.push(dir.clone());
        path.log_big_n.push(ln);
    })?;
    Ok(path)
}
