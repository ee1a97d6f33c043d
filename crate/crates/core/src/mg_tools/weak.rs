use serde::{Deserialize, Serialize};

use crate::error::{domain, LabError, Result};

/// Empirical `||X||_{p,inf} = sup_t t P(|X| > t)^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakLpEstimate {
    pub p: f64,
    pub value: f64,
    pub sample_size: usize,
    /// Order statistic `|X|` at which the supremum is attained.
    pub attained_at: f64,
}

/// Supremum over `t -> |X|_(i)^-` of `t (#{|X| >= |X|_(i)} / N)^{1/p}`; the
/// empirical supremum is attained just below an order statistic.
pub fn weak_lp_norm(samples: &[f64], p: f64) -> Result<WeakLpEstimate> {
    weak_lp_norm_trimmed(samples, p, 1)
}

/// As [`weak_lp_norm`] but only over thresholds exceeded by at least
/// `min_exceedances` samples. The raw supremum is driven by the largest few
/// order statistics and does not settle for samples with tail index `p`;
/// trimming the extreme ones gives a consistent estimate.
pub fn weak_lp_norm_trimmed(samples: &[f64], p: f64, min_exceedances: usize) -> Result<WeakLpEstimate> {
    if samples.is_empty() {
        return Err(LabError::InsufficientData("weak L^p norm of an empty sample".into()));
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(domain("p must be positive"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(domain("samples must be finite"));
    }
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    let n = abs.len() as f64;
    let mut best = (0.0, 0.0);
    let mut i = 0;
    while i < abs.len() {
        let t = abs[i];
        let mut j = i;
        while j < abs.len() && abs[j] == t {
            j += 1;
        }
        // j samples are >= t.
        if j >= min_exceedances {
            let v = t * (j as f64 / n).powf(1.0 / p);
            if v > best.0 {
                best = (v, t);
            }
        }
        i = j;
    }
    Ok(WeakLpEstimate { p, value: best.0, sample_size: samples.len(), attained_at: best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn examples() {
        assert_eq!(weak_lp_norm(&[3.0; 5], 1.5).unwrap().value, 3.0);
        let v = weak_lp_norm(&[1.0, 2.0, 4.0], 2.0).unwrap();
        assert!((v.value - 4.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(v.attained_at, 4.0);
        assert!(weak_lp_norm(&[], 1.5).is_err());
        assert_eq!(weak_lp_norm(&[0.0, 0.0], 1.5).unwrap().value, 0.0);
    }

    #[test]
    fn signs_are_ignored() {
        let a = weak_lp_norm(&[-1.0, 2.0, -4.0], 1.5).unwrap().value;
        let b = weak_lp_norm(&[1.0, 2.0, 4.0], 1.5).unwrap().value;
        assert_eq!(a, b);
    }

    #[test]
    fn pareto_tail_gives_unit_norm() {
        // P(W > t) = t^{-p} for t >= 1, so the weak norm is exactly 1.
        let p = 1.5;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<f64> = (0..1_000_000).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / p)).collect();
        let est = weak_lp_norm_trimmed(&xs, p, 1000).unwrap();
        assert!((est.value - 1.0).abs() < 0.05, "{est:?}");
    }
}
