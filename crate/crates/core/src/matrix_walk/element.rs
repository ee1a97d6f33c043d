use smallvec::SmallVec;

use super::matrix::{SquareMatrix, Vector};
use super::projective::ProjectivePoint;
use crate::error::{LabError, Result};

/// A sampled group element.
///
/// Heavy-tailed and scaled families can produce matrices whose entries
/// overflow or whose condition number exceeds any dense tolerance, so those
/// are kept in polar form `left * diag(exp(log_singular)) * right` and all
/// cocycle evaluations are done in log space.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Dense { matrix: SquareMatrix, log_big_n: f64 },
    Polar(PolarFactors),
}

/// `left * diag(exp(log_singular)) * right` with `left`, `right` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarFactors {
    dim: usize,
    left: SmallVec<[f64; 16]>,
    log_singular: Vector,
    right: SmallVec<[f64; 16]>,
}

impl PolarFactors {
    /// `left` and `right` must be orthogonal (row-major); this is not re-checked.
    pub fn new(left: &SquareMatrix, log_singular: &[f64], right: &SquareMatrix) -> Result<Self> {
        let dim = left.dim();
        if right.dim() != dim || log_singular.len() != dim {
            return Err(LabError::DimensionMismatch { expected: dim, got: log_singular.len() });
        }
        if log_singular.iter().any(|s| !s.is_finite()) {
            return Err(LabError::Invariant("log singular values must be finite".into()));
        }
        Ok(PolarFactors {
            dim,
            left: left.entries().into(),
            log_singular: log_singular.into(),
            right: right.entries().into(),
        })
    }

    pub fn log_singular(&self) -> &[f64] {
        &self.log_singular
    }
}

impl From<SquareMatrix> for GroupElement {
    fn from(matrix: SquareMatrix) -> Self {
        let log_big_n = matrix.log_big_n();
        GroupElement::Dense { matrix, log_big_n }
    }
}

#[inline]
fn mat_vec(d: usize, m: &[f64], x: &[f64]) -> Vector {
    m.chunks_exact(d).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

impl GroupElement {
    pub fn dim(&self) -> usize {
        match self {
            GroupElement::Dense { matrix, .. } => matrix.dim(),
            GroupElement::Polar(f) => f.dim,
        }
    }

    /// `log N(g)`.
    pub fn log_big_n(&self) -> f64 {
        match self {
            GroupElement::Dense { log_big_n, .. } => *log_big_n,
            GroupElement::Polar(f) => {
                let max = f.log_singular.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = f.log_singular.iter().copied().fold(f64::INFINITY, f64::min);
                max.max(-min)
            }
        }
    }

    /// Norm cocycle and action in one pass: `(log |g x|, g . x)` for unit `x`.
    #[inline]
    pub fn step(&self, x: &ProjectivePoint) -> (f64, ProjectivePoint) {
        match self {
            GroupElement::Dense { matrix, .. } => {
                let y = matrix.apply(x.direction());
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                (norm.ln(), ProjectivePoint::from_scaled(y.into_iter(), norm))
            }
            GroupElement::Polar(f) => {
                let d = f.dim;
                let y = mat_vec(d, &f.right, x.direction());
                let top = f.log_singular.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut z: Vector = y
                    .iter()
                    .zip(&f.log_singular)
                    .map(|(yi, si)| yi * (si - top).exp())
                    .collect();
                let mut n2: f64 = z.iter().map(|v| v * v).sum();
                let mut shift = top;
                if n2 < 1e-200 {
                    // x is (nearly) inside the contracting directions: rescale
                    // around the dominant surviving term.
                    shift = y
                        .iter()
                        .zip(&f.log_singular)
                        .filter(|(yi, _)| **yi != 0.0)
                        .map(|(yi, si)| si + yi.abs().ln())
                        .fold(f64::NEG_INFINITY, f64::max);
                    z = y
                        .iter()
                        .zip(&f.log_singular)
                        .map(|(yi, si)| {
                            if *yi == 0.0 {
                                0.0
                            } else {
                                yi.signum() * (si + yi.abs().ln() - shift).exp()
                            }
                        })
                        .collect();
                    n2 = z.iter().map(|v| v * v).sum();
                    let sigma = shift + 0.5 * n2.ln();
                    let w = mat_vec(d, &f.left, &z);
                    let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                    return (sigma, ProjectivePoint::from_scaled(w.into_iter(), wn));
                }
                let sigma = shift + 0.5 * n2.ln();
                let w = mat_vec(d, &f.left, &z);
                let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                (sigma, ProjectivePoint::from_scaled(w.into_iter(), wn))
            }
        }
    }

    /// `sigma(g, x) = log |g x|` for the unit representative `x`.
    pub fn sigma(&self, x: &ProjectivePoint) -> f64 {
        self.step(x).0
    }

    /// Projective action `g . x`.
    pub fn act(&self, x: &ProjectivePoint) -> ProjectivePoint {
        self.step(x).1
    }

    /// Dense form, validated by the `SquareMatrix` invariants.
    pub fn to_dense(&self) -> Result<SquareMatrix> {
        match self {
            GroupElement::Dense { matrix, .. } => Ok(matrix.clone()),
            GroupElement::Polar(f) => {
                let d = f.dim;
                let mut entries = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        entries[i * d + j] = (0..d)
                            .map(|k| f.left[i * d + k] * f.log_singular[k].exp() * f.right[k * d + j])
                            .sum();
                    }
                }
                SquareMatrix::new(d, entries)
            }
        }
    }

    /// Product `self * rhs` as a dense matrix.
    pub fn compose(&self, rhs: &GroupElement) -> Result<GroupElement> {
        Ok(self.to_dense()?.mul(&rhs.to_dense()?)?.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_and_dense_agree() {
        let left = SquareMatrix::rotation(2, 0.4);
        let right = SquareMatrix::rotation(2, -1.1);
        let polar = GroupElement::Polar(PolarFactors::new(&left, &[1.2, -0.3], &right).unwrap());
        let dense: GroupElement = polar.to_dense().unwrap().into();
        for k in 0..20 {
            let x = ProjectivePoint::from_angle(0.3 * k as f64);
            let (s1, a1) = polar.step(&x);
            let (s2, a2) = dense.step(&x);
            assert!((s1 - s2).abs() < 1e-12);
            for (u, v) in a1.direction().iter().zip(a2.direction()) {
                assert!((u - v).abs() < 1e-12);
            }
        }
        assert!((polar.log_big_n() - dense.log_big_n()).abs() < 1e-12);
    }

    #[test]
    fn extreme_polar_stays_finite() {
        let id = SquareMatrix::identity(2);
        let g = GroupElement::Polar(PolarFactors::new(&id, &[900.0, -900.0], &id).unwrap());
        let (s, a) = g.step(&ProjectivePoint::basis(2, 1));
        assert!((s + 900.0).abs() < 1e-9);
        assert_eq!(a, ProjectivePoint::basis(2, 1));
        let (s, a) = g.step(&ProjectivePoint::from_angle(1e-3));
        assert!((s - (900.0 + (1e-3f64).cos().ln())).abs() < 1e-9);
        assert_eq!(a, ProjectivePoint::basis(2, 0));
        assert_eq!(g.log_big_n(), 900.0);
        assert!(g.to_dense().is_err());
    }
}
