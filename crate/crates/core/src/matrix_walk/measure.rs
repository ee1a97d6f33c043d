use std::borrow::Cow;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::element::{GroupElement, PolarFactors};
use super::matrix::SquareMatrix;
use crate::error::{invariant, LabError, Result};

const WEIGHT_TOL: f64 = 1e-12;
const GAUSSIAN_RETRIES: usize = 64;

/// Law of a real random variable (the log-scale of a scaled rotation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ScalarLaw {
    Constant { value: f64 },
    Discrete { values: Vec<f64>, weights: Vec<f64> },
    Normal { mean: f64, std: f64 },
}

impl ScalarLaw {
    fn validate(&self) -> Result<()> {
        match self {
            ScalarLaw::Constant { value } if !value.is_finite() => Err(invariant("constant law must be finite")),
            ScalarLaw::Discrete { values, weights } => {
                if values.len() != weights.len() || values.is_empty() {
                    return Err(invariant("discrete law needs equally many values and weights"));
                }
                check_weights(weights)
            }
            ScalarLaw::Normal { mean, std } if !(mean.is_finite() && *std >= 0.0 && std.is_finite()) => {
                Err(invariant("normal law needs finite mean and std >= 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScalarLaw::Constant { value } => *value,
            ScalarLaw::Discrete { values, weights } => values[pick(weights, rng.random::<f64>())],
            ScalarLaw::Normal { mean, std } => Normal::new(*mean, *std).expect("validated").sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ScalarLaw::Constant { value } => *value,
            ScalarLaw::Discrete { values, weights } => values.iter().zip(weights).map(|(v, w)| v * w).sum(),
            ScalarLaw::Normal { mean, .. } => *mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ScalarLaw::Constant { .. } => 0.0,
            ScalarLaw::Discrete { values, weights } => {
                let m = self.mean();
                values.iter().zip(weights).map(|(v, w)| w * (v - m).powi(2)).sum()
            }
            ScalarLaw::Normal { std, .. } => std * std,
        }
    }
}

/// Declarative description of the step distribution `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MeasureFamily {
    /// Finitely many matrices with probability weights.
    FiniteSupport { matrices: Vec<SquareMatrix>, weights: Vec<f64> },
    /// `exp(S) * R` with `S` drawn from `log_scale` and `R` either uniform or
    /// the fixed rotation by `angle` in the (e1, e2) plane.
    ScaledRotation {
        log_scale: ScalarLaw,
        #[serde(default)]
        uniform_rotation: bool,
        #[serde(default)]
        angle: f64,
    },
    /// `R_theta * diag(e^W, 1, .., 1, e^-W) * R_phi` with `P(W > t) = min(1, t^-p)`,
    /// so `log N = W` has a weak moment of order exactly `p`.
    HeavyTailedConjugatedDiagonal {
        tail_index: f64,
        #[serde(default = "default_true")]
        randomize_rotations: bool,
    },
    /// I.i.d. centred Gaussian entries.
    GaussianEntries { std: f64 },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMeasureSpec {
    dim: usize,
    #[serde(flatten)]
    family: MeasureFamily,
}

/// Validated measure with sampling caches.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawMeasureSpec", into = "RawMeasureSpec")]
pub struct MeasureSpec {
    dim: usize,
    family: MeasureFamily,
    support: Vec<GroupElement>,
}

impl PartialEq for MeasureSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.family == other.family
    }
}

impl TryFrom<RawMeasureSpec> for MeasureSpec {
    type Error = LabError;

    fn try_from(raw: RawMeasureSpec) -> Result<Self> {
        MeasureSpec::new(raw.dim, raw.family)
    }
}

impl From<MeasureSpec> for RawMeasureSpec {
    fn from(m: MeasureSpec) -> Self {
        RawMeasureSpec { dim: m.dim, family: m.family }
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(invariant("weights must be non-negative and finite"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(invariant(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

#[inline]
fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave u above the final cumulative weight.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

/// Haar-distributed orthogonal matrix (uniform rotation for `d = 2`).
pub fn uniform_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SquareMatrix {
    if dim == 2 {
        return SquareMatrix::rotation(2, 2.0 * PI * rng.random::<f64>());
    }
    loop {
        // Gram-Schmidt on Gaussian columns.
        let mut cols: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let mut ok = true;
        for j in 0..dim {
            for k in 0..j {
                let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let ck = cols[k].clone();
                cols[j].iter_mut().zip(ck).for_each(|(a, b)| *a -= dot * b);
            }
            let n = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|x| *x /= n);
        }
        if ok {
            let entries = (0..dim).flat_map(|i| cols.iter().map(move |c| c[i])).collect();
            return SquareMatrix::new(dim, entries).expect("orthogonal matrix is well conditioned");
        }
    }
}

impl MeasureSpec {
    pub fn new(dim: usize, family: MeasureFamily) -> Result<Self> {
        if dim < 2 {
            return Err(invariant(format!("dimension must be at least 2, got {dim}")));
        }
        let mut support = Vec::new();
        match &family {
            MeasureFamily::FiniteSupport { matrices, weights } => {
                if matrices.is_empty() || matrices.len() != weights.len() {
                    return Err(invariant("finite support needs equally many matrices and weights"));
                }
                check_weights(weights)?;
                for m in matrices {
                    if m.dim() != dim {
                        return Err(LabError::DimensionMismatch { expected: dim, got: m.dim() });
                    }
                    support.push(GroupElement::from(m.clone()));
                }
            }
            MeasureFamily::ScaledRotation { log_scale, angle, .. } => {
                log_scale.validate()?;
                if !angle.is_finite() {
                    return Err(invariant("rotation angle must be finite"));
                }
            }
            MeasureFamily::HeavyTailedConjugatedDiagonal { tail_index, .. } => {
                if !(*tail_index > 0.0) || !tail_index.is_finite() {
                    return Err(invariant(format!("tail index must be positive, got {tail_index}")));
                }
            }
            MeasureFamily::GaussianEntries { std } => {
                if !(*std > 0.0) || !std.is_finite() {
                    return Err(invariant(format!("entry std must be positive, got {std}")));
                }
            }
        }
        Ok(MeasureSpec { dim, family, support })
    }

    /// Dirac mass at `m`.
    pub fn dirac(m: SquareMatrix) -> Self {
        let dim = m.dim();
        Self::new(dim, MeasureFamily::FiniteSupport { matrices: vec![m], weights: vec![1.0] })
            .expect("single matrix with unit weight")
    }

    pub fn finite(matrices: Vec<SquareMatrix>, weights: Vec<f64>) -> Result<Self> {
        let dim = matrices.first().map(|m| m.dim()).unwrap_or(2);
        Self::new(dim, MeasureFamily::FiniteSupport { matrices, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &MeasureFamily {
        &self.family
    }

    /// Support elements with weights, for finite measures.
    pub fn finite_support(&self) -> Option<(&[GroupElement], &[f64])> {
        match &self.family {
            MeasureFamily::FiniteSupport { weights, .. } => Some((&self.support, weights)),
            _ => None,
        }
    }

    /// One draw from the measure. Finite supports are returned by reference.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Cow<'_, GroupElement>> {
        let d = self.dim;
        match &self.family {
            MeasureFamily::FiniteSupport { weights, .. } => {
                let i = if weights.len() == 1 { 0 } else { pick(weights, rng.random::<f64>()) };
                Ok(Cow::Borrowed(&self.support[i]))
            }
            MeasureFamily::ScaledRotation { log_scale, uniform_rotation, angle } => {
                let s = log_scale.sample(rng);
                let rot = if *uniform_rotation {
                    uniform_orthogonal(d, rng)
                } else {
                    SquareMatrix::rotation(d, *angle)
                };
                let f = PolarFactors::new(&rot, &vec![s; d], &SquareMatrix::identity(d))?;
                Ok(Cow::Owned(GroupElement::Polar(f)))
            }
            MeasureFamily::HeavyTailedConjugatedDiagonal { tail_index, randomize_rotations } => {
                let u = 1.0 - rng.random::<f64>();
                let w = u.powf(-1.0 / tail_index);
                let mut logs = vec![0.0; d];
                logs[0] = w;
                logs[d - 1] = -w;
                let (left, right) = if *randomize_rotations {
                    (uniform_orthogonal(d, rng), uniform_orthogonal(d, rng))
                } else {
                    (SquareMatrix::identity(d), SquareMatrix::identity(d))
                };
                Ok(Cow::Owned(GroupElement::Polar(PolarFactors::new(&left, &logs, &right)?)))
            }
            MeasureFamily::GaussianEntries { std } => {
                let normal = Normal::new(0.0, *std).expect("validated std");
                for _ in 0..GAUSSIAN_RETRIES {
                    let entries: Vec<f64> = (0..d * d).map(|_| normal.sample(rng)).collect();
                    if let Ok(m) = SquareMatrix::new(d, entries) {
                        return Ok(Cow::Owned(m.into()));
                    }
                }
                Err(LabError::NumericFailure { routine: "sample_matrix", iterations: GAUSSIAN_RETRIES })
            }
        }
    }

    /// Lyapunov exponent when it is available in closed form: scaled
    /// rotations and finite supports of conformal matrices.
    pub fn exact_lambda(&self) -> Option<f64> {
        self.conformal_log_scale().map(|(m, _)| m)
    }

    /// Asymptotic variance in the same closed-form cases as `exact_lambda`
    /// (the cocycle is then an i.i.d. sum).
    pub fn exact_variance(&self) -> Option<f64> {
        self.conformal_log_scale().map(|(_, v)| v)
    }

    fn conformal_log_scale(&self) -> Option<(f64, f64)> {
        match &self.family {
            MeasureFamily::ScaledRotation { log_scale, .. } => Some((log_scale.mean(), log_scale.variance())),
            MeasureFamily::FiniteSupport { matrices, weights } => {
                let mut logs = Vec::with_capacity(matrices.len());
                for m in matrices {
                    let s = m.singular_values();
                    if (s[0] - s[self.dim - 1]).abs() > 1e-12 * s[0] {
                        return None;
                    }
                    logs.push(s[0].ln());
                }
                let mean: f64 = logs.iter().zip(weights).map(|(l, w)| l * w).sum();
                let var: f64 = logs.iter().zip(weights).map(|(l, w)| w * (l - mean).powi(2)).sum();
                Some((mean, var))
            }
            _ => None,
        }
    }

    /// `mu{log N > t}` when it has a closed form.
    pub fn log_big_n_tail(&self, t: f64) -> Option<f64> {
        match &self.family {
            MeasureFamily::FiniteSupport { weights, .. } => Some(
                self.support
                    .iter()
                    .zip(weights)
                    .filter(|(g, _)| g.log_big_n() > t)
                    .map(|(_, w)| w)
                    .sum(),
            ),
            MeasureFamily::HeavyTailedConjugatedDiagonal { tail_index, .. } => {
                Some(if t < 1.0 { 1.0 } else { t.powf(-tail_index) })
            }
            MeasureFamily::ScaledRotation { log_scale: ScalarLaw::Constant { value }, .. } => {
                Some(if value.abs() > t { 1.0 } else { 0.0 })
            }
            MeasureFamily::ScaledRotation { log_scale: ScalarLaw::Discrete { values, weights }, .. } => Some(
                values.iter().zip(weights).filter(|(v, _)| v.abs() > t).map(|(_, w)| w).sum(),
            ),
            _ => None,
        }
    }
}
