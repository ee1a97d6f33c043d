use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::matrix::Vector;
use crate::error::{invariant, Result};

/// Coordinates smaller than this are skipped when fixing the canonical sign.
pub const SIGN_THRESHOLD: f64 = 1e-9;

/// A point of the projective space `P_{d-1}(R)`: a unit vector with the first
/// significantly nonzero coordinate positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProjectivePoint {
    direction: Vector,
}

impl ProjectivePoint {
    /// Normalizes and canonicalizes `v`. Fails on a zero or non-finite vector.
    pub fn new(v: &[f64]) -> Result<Self> {
        if v.len() < 2 {
            return Err(invariant("projective points need dimension at least 2"));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(invariant("cannot projectivize a zero or non-finite vector"));
        }
        Ok(Self::from_scaled(v.iter().copied(), norm))
    }

    /// `v / norm` with canonical sign; `norm` must be the positive Euclidean norm of `v`.
    #[inline]
    pub(crate) fn from_scaled(v: impl Iterator<Item = f64>, norm: f64) -> Self {
        let mut direction: Vector = v.map(|x| x / norm).collect();
        let flip = direction
            .iter()
            .find(|x| x.abs() > SIGN_THRESHOLD)
            .is_some_and(|x| *x < 0.0);
        if flip {
            direction.iter_mut().for_each(|x| *x = -*x);
        }
        ProjectivePoint { direction }
    }

    /// Standard basis direction `e_i` in dimension `d`.
    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim && dim >= 2);
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self::new(&v).expect("basis vector is nonzero")
    }

    /// The line at angle `theta` in the plane.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_scaled([c, s].into_iter(), 1.0)
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// Angle in `[0, pi)` of a planar line; `None` for `d != 2`.
    pub fn angle(&self) -> Option<f64> {
        if self.dim() != 2 {
            return None;
        }
        let mut t = self.direction[1].atan2(self.direction[0]);
        if t < 0.0 {
            t += PI;
        }
        if t >= PI {
            t -= PI;
        }
        Some(t)
    }
}

impl TryFrom<Vec<f64>> for ProjectivePoint {
    type Error = crate::error::LabError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<ProjectivePoint> for Vec<f64> {
    fn from(p: ProjectivePoint) -> Self {
        p.direction.to_vec()
    }
}

/// Deterministic quasi-uniform set of directions.
///
/// `d = 2`: equispaced angles `k pi / size`. `d = 3`: Fibonacci points on the
/// upper hemisphere. `d >= 4`: Halton points pushed through Box-Muller and
/// normalized.
pub fn direction_grid(dim: usize, size: usize) -> Vec<ProjectivePoint> {
    assert!(dim >= 2 && size >= 1);
    match dim {
        2 => (0..size).map(|k| ProjectivePoint::from_angle(PI * k as f64 / size as f64)).collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..size)
                .map(|i| {
                    let z = (i as f64 + 0.5) / size as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    ProjectivePoint::new(&[r * phi.cos(), r * phi.sin(), z]).expect("unit vector")
                })
                .collect()
        }
        _ => {
            let primes = first_primes(2 * dim.div_ceil(2));
            (1..=size as u64)
                .map(|i| {
                    let mut v = Vec::with_capacity(dim + 1);
                    for pair in primes.chunks(2) {
                        let u1 = radical_inverse(i, pair[0]).max(f64::MIN_POSITIVE);
                        let u2 = radical_inverse(i, pair[1]);
                        let r = (-2.0 * u1.ln()).sqrt();
                        v.push(r * (2.0 * PI * u2).cos());
                        v.push(r * (2.0 * PI * u2).sin());
                    }
                    v.truncate(dim);
                    ProjectivePoint::new(&v).unwrap_or_else(|_| ProjectivePoint::basis(dim, 0))
                })
                .collect()
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut k = 2u64;
    while primes.len() < count {
        if primes.iter().all(|p| !k.is_multiple_of(*p)) {
            primes.push(k);
        }
        k += 1;
    }
    primes
}
