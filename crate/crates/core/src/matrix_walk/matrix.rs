use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invariant, LabError, Result};

/// Small dense vector, stored inline for `d <= 4`.
pub type Vector = SmallVec<[f64; 4]>;

/// Smallest admissible ratio of smallest to largest singular value.
pub const MIN_CONDITION_RATIO: f64 = 1e-12;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000;
const JACOBI_MAX_SWEEPS: usize = 80;

/// Dense invertible `d x d` real matrix (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SquareMatrix {
    dim: usize,
    entries: SmallVec<[f64; 16]>,
}

/// Singular value decomposition `m = u * diag(s) * v^T`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub dim: usize,
    pub u: Vec<f64>,
    pub singular: Vec<f64>,
    pub v: Vec<f64>,
}

impl SquareMatrix {
    /// Validating constructor: `dim >= 2`, finite entries, and
    /// `s_min >= MIN_CONDITION_RATIO * s_max`.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        let m = Self::from_entries_unchecked(dim, entries)?;
        let s = jacobi_svd(dim, &m.entries).singular;
        let (largest, smallest) = (s[0], s[dim - 1]);
        if !(largest > 0.0) || smallest < MIN_CONDITION_RATIO * largest {
            return Err(invariant(format!(
                "matrix is singular or too ill-conditioned (s_min = {smallest:e}, s_max = {largest:e})"
            )));
        }
        Ok(m)
    }

    /// Shape and finiteness checks only. Used for intermediate products whose
    /// conditioning is irrelevant to the caller.
    pub(crate) fn from_entries_unchecked(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(invariant(format!("dimension must be at least 2, got {dim}")));
        }
        if entries.len() != dim * dim {
            return Err(LabError::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(invariant("matrix has non-finite entries"));
        }
        Ok(SquareMatrix { dim, entries: SmallVec::from_vec(entries) })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invariant("matrix rows must all have length equal to the row count"));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    /// Diagonal matrix. Panics on a zero entry or `len < 2`.
    pub fn diag(values: &[f64]) -> Self {
        let d = values.len();
        assert!(d >= 2 && values.iter().all(|v| *v != 0.0 && v.is_finite()));
        let mut entries = vec![0.0; d * d];
        for (i, v) in values.iter().enumerate() {
            entries[i * d + i] = *v;
        }
        SquareMatrix { dim: d, entries: SmallVec::from_vec(entries) }
    }

    /// Rotation by `theta` in the (e1, e2) plane, identity on the rest.
    pub fn rotation(dim: usize, theta: f64) -> Self {
        let mut m = Self::identity(dim);
        let (s, c) = theta.sin_cos();
        m.entries[0] = c;
        m.entries[1] = -s;
        m.entries[dim] = s;
        m.entries[dim + 1] = c;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.dim, self.entries.iter().map(|x| x * c).collect())
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut entries = SmallVec::from_elem(0.0, d * d);
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.entries[i * d + j];
            }
        }
        SquareMatrix { dim: d, entries }
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &SquareMatrix) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(LabError::DimensionMismatch { expected: self.dim, got: rhs.dim });
        }
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.entries[i * d + k];
                for j in 0..d {
                    out[i * d + j] += a * rhs.entries[k * d + j];
                }
            }
        }
        Self::from_entries_unchecked(d, out)
    }

    /// Matrix-vector product. `x` must have length `dim`.
    #[inline]
    pub fn apply(&self, x: &[f64]) -> Vector {
        debug_assert_eq!(x.len(), self.dim);
        self.entries
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.dim;
        let mut a: Vec<f64> = self.entries.to_vec();
        let mut inv: Vec<f64> = Self::identity(d).entries.to_vec();
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&r, &s| a[r * d + col].abs().total_cmp(&a[s * d + col].abs()))
                .unwrap_or(col);
            let pv = a[pivot * d + col];
            if pv.abs() <= f64::EPSILON * scale {
                return Err(invariant("matrix is numerically singular; inversion failed"));
            }
            if pivot != col {
                for j in 0..d {
                    a.swap(pivot * d + j, col * d + j);
                    inv.swap(pivot * d + j, col * d + j);
                }
            }
            for j in 0..d {
                a[col * d + j] /= pv;
                inv[col * d + j] /= pv;
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let f = a[r * d + col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..d {
                    a[r * d + j] -= f * a[col * d + j];
                    inv[r * d + j] -= f * inv[col * d + j];
                }
            }
        }
        Self::from_entries_unchecked(d, inv)
    }

    pub fn svd(&self) -> Svd {
        jacobi_svd(self.dim, &self.entries)
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        self.svd().singular
    }

    /// Largest singular value `sup_{|x|=1} |m x|`.
    ///
    /// One-sided Jacobi SVD for `d <= 4`, otherwise power iteration on `m^T m`
    /// from a fixed start vector.
    pub fn operator_norm(&self) -> Result<f64> {
        if self.dim <= 4 {
            Ok(self.svd().singular[0])
        } else {
            power_iteration_norm(self)
        }
    }

    /// `N(g) = max(|g|, |g^{-1}|)`.
    pub fn big_n(&self) -> Result<f64> {
        let inv = self.inverse()?;
        Ok(self.operator_norm()?.max(inv.operator_norm()?))
    }

    /// `log N(g)` computed from the singular values, stable for any conditioning.
    pub fn log_big_n(&self) -> f64 {
        let s = self.singular_values();
        s[0].ln().max(-s[self.dim - 1].ln())
    }
}

impl TryFrom<Vec<Vec<f64>>> for SquareMatrix {
    type Error = LabError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SquareMatrix> for Vec<Vec<f64>> {
    fn from(m: SquareMatrix) -> Self {
        m.rows()
    }
}

fn power_iteration_norm(m: &SquareMatrix) -> Result<f64> {
    let d = m.dim;
    let mt = m.transpose();
    // Non-symmetric start so it is not orthogonal to structured top vectors.
    let mut x: Vector = (0..d).map(|k| 1.0 + 1.0 / (k as f64 + 2.0)).collect();
    let mut norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm_x);
    let mut estimate = 0.0;
    for iter in 1..=POWER_MAX_ITER {
        let y = mt.apply(&m.apply(&x));
        norm_x = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            return Err(LabError::NumericFailure { routine: "operator_norm", iterations: iter });
        }
        let next = norm_x.sqrt();
        x = y.iter().map(|v| v / norm_x).collect();
        if (next - estimate).abs() <= POWER_TOL * next {
            return Ok(next);
        }
        estimate = next;
    }
    Err(LabError::NumericFailure { routine: "operator_norm", iterations: POWER_MAX_ITER })
}

/// One-sided (Hestenes) Jacobi SVD. Relative accuracy of every singular value
/// is close to machine precision, including the smallest.
pub(crate) fn jacobi_svd(d: usize, a: &[f64]) -> Svd {
    let mut w = a.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d - 1 {
            for q in p + 1..d {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..d {
                    let (wp, wq) = (w[i * d + p], w[i * d + q]);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + 1.0f64.hypot(zeta));
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..d {
                        let (xp, xq) = (mat[i * d + p], mat[i * d + q]);
                        mat[i * d + p] = c * xp - s * xq;
                        mat[i * d + q] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..d)
        .map(|j| (0..d).map(|i| w[i * d + j].powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = vec![0.0; d * d];
    let mut vs = vec![0.0; d * d];
    let mut singular = vec![0.0; d];
    for (new, &old) in order.iter().enumerate() {
        singular[new] = norms[old];
        for i in 0..d {
            u[i * d + new] = if norms[old] > 0.0 { w[i * d + old] / norms[old] } else { 0.0 };
            vs[i * d + new] = v[i * d + old];
        }
    }
    Svd { dim: d, u, singular, v: vs }
}
