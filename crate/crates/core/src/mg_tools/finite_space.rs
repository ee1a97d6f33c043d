use serde::{Deserialize, Serialize};

use crate::error::{domain, invariant, Result};

/// Adapted sequence on a finite product probability space.
///
/// Coordinate `i` (1-based) takes `branching[i-1]` values with probabilities
/// `probs[i-1]`, independently. A prefix of length `k` is encoded in mixed
/// radix, so its children are `idx * b_{k+1} + c`. `values[k-1][idx]` is
/// `X_k` on the prefix `idx` of length `k`, which makes `X` adapted to the
/// filtration generated by the coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteAdaptedSpace {
    branching: Vec<usize>,
    probs: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
}

/// Function on prefixes of a fixed length.
pub type LevelFn = Vec<f64>;

impl FiniteAdaptedSpace {
    pub fn new(branching: Vec<usize>, probs: Vec<Vec<f64>>, values: Vec<Vec<f64>>) -> Result<Self> {
        if branching.is_empty() {
            return Err(domain("depth must be at least 1"));
        }
        if probs.len() != branching.len() || values.len() != branching.len() {
            return Err(domain("branching, probabilities and values must have one entry per level"));
        }
        let mut width = 1usize;
        for (k, (&b, p)) in branching.iter().zip(&probs).enumerate() {
            if b < 2 {
                return Err(domain(format!("level {} has branching {b} < 2", k + 1)));
            }
            if p.len() != b || p.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
                return Err(invariant(format!("level {} probabilities must be {b} positive numbers", k + 1)));
            }
            if (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(invariant(format!("level {} probabilities must sum to 1", k + 1)));
            }
            width = width.checked_mul(b).ok_or_else(|| domain("space too large"))?;
            if values[k].len() != width {
                return Err(domain(format!("level {} needs {width} values, got {}", k + 1, values[k].len())));
            }
            if values[k].iter().any(|v| !v.is_finite()) {
                return Err(domain("values must be finite"));
            }
        }
        Ok(FiniteAdaptedSpace { branching, probs, values })
    }

    /// Fair binary tree with the given values per level.
    pub fn binary(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        Self::new(vec![2; n], vec![vec![0.5, 0.5]; n], values)
    }

    pub fn depth(&self) -> usize {
        self.branching.len()
    }

    pub fn branching(&self) -> &[usize] {
        &self.branching
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Number of prefixes of length `k` (`k = 0` is the root).
    pub fn width(&self, k: usize) -> usize {
        self.branching[..k].iter().product()
    }

    /// Probability of every prefix of length `k`.
    pub fn prefix_probs(&self, k: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        for level in 0..k {
            let p = &self.probs[level];
            out = out.iter().flat_map(|&w| p.iter().map(move |&q| w * q)).collect();
        }
        out
    }

    /// `E(f | F_j)` for `f` measurable w.r.t. level `k >= j`.
    pub fn cond_expectation(&self, f: &[f64], k: usize, j: usize) -> LevelFn {
        assert!(j <= k && f.len() == self.width(k));
        let mut cur = f.to_vec();
        for level in (j..k).rev() {
            let b = self.branching[level];
            let p = &self.probs[level];
            cur = cur.chunks_exact(b).map(|ch| ch.iter().zip(p).map(|(v, q)| v * q).sum()).collect();
        }
        cur
    }

    /// Lifts a level-`j` function to level `k >= j`.
    pub fn lift(&self, f: &[f64], j: usize, k: usize) -> LevelFn {
        let mut cur = f.to_vec();
        for level in j..k {
            let b = self.branching[level];
            cur = cur.iter().flat_map(|&v| std::iter::repeat_n(v, b)).collect();
        }
        cur
    }

    /// `E |f|^p` for a level-`k` function.
    pub fn moment(&self, f: &[f64], k: usize, p: f64) -> f64 {
        self.prefix_probs(k).iter().zip(f).map(|(w, v)| w * v.abs().powf(p)).sum()
    }

    pub fn lp_norm(&self, f: &[f64], k: usize, p: f64) -> f64 {
        self.moment(f, k, p).powf(1.0 / p)
    }

    /// `P(pred(f))` for a level-`k` function.
    pub fn probability(&self, f: &[f64], k: usize, pred: impl Fn(f64) -> bool) -> f64 {
        self.prefix_probs(k).iter().zip(f).filter(|(_, v)| pred(**v)).map(|(w, _)| w).sum()
    }

    /// Partial sums `S_k` as level-`k` functions, `k = 0..=n` (`S_0 = 0`).
    pub fn partial_sums(&self) -> Vec<LevelFn> {
        let mut out = vec![vec![0.0]];
        for k in 1..=self.depth() {
            let prev = self.lift(&out[k - 1], k - 1, k);
            out.push(prev.iter().zip(&self.values[k - 1]).map(|(a, b)| a + b).collect());
        }
        out
    }

    /// `max_{1<=i<=n} |S_i|` on the atoms.
    pub fn running_max_abs(&self) -> LevelFn {
        let sums = self.partial_sums();
        let mut m = vec![0.0];
        for (k, s_k) in sums.iter().enumerate().skip(1) {
            m = self.lift(&m, k - 1, k).iter().zip(s_k).map(|(a, s)| a.max(s.abs())).collect();
        }
        m
    }

    /// Martingale differences `X_k - E(X_k | F_{k-1})`.
    pub fn centered(&self) -> Self {
        let values = (1..=self.depth())
            .map(|k| {
                let x = &self.values[k - 1];
                let m = self.lift(&self.cond_expectation(x, k, k - 1), k - 1, k);
                x.iter().zip(&m).map(|(a, b)| a - b).collect()
            })
            .collect();
        FiniteAdaptedSpace { branching: self.branching.clone(), probs: self.probs.clone(), values }
    }

    /// Same space and filtration with new values.
    pub fn with_values(&self, values: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.branching.clone(), self.probs.clone(), values)
    }

    /// Largest `|E(X_k | F_{k-1})|` over levels and prefixes.
    pub fn max_conditional_mean(&self) -> f64 {
        (1..=self.depth())
            .flat_map(|k| self.cond_expectation(&self.values[k - 1], k, k - 1))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_level() -> FiniteAdaptedSpace {
        FiniteAdaptedSpace::new(
            vec![2, 3],
            vec![vec![0.25, 0.75], vec![0.2, 0.3, 0.5]],
            vec![vec![1.0, -2.0], vec![0.5, 1.0, -1.0, 3.0, 0.0, 2.0]],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(FiniteAdaptedSpace::new(vec![1], vec![vec![1.0]], vec![vec![0.0]]).is_err());
        assert!(FiniteAdaptedSpace::new(vec![2], vec![vec![0.5, 0.6]], vec![vec![0.0, 1.0]]).is_err());
        assert!(FiniteAdaptedSpace::new(vec![2], vec![vec![0.5, 0.5]], vec![vec![0.0]]).is_err());
        assert!(FiniteAdaptedSpace::new(vec![2], vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn probabilities_and_expectations_match_enumeration() {
        let s = three_level();
        let probs = s.prefix_probs(2);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((probs[4] - 0.75 * 0.3).abs() < 1e-15);
        // E(X_2 | F_1) on prefix 1: 0.2*3 + 0.3*0 + 0.5*2.
        let ce = s.cond_expectation(&s.values()[1], 2, 1);
        assert!((ce[1] - 1.6).abs() < 1e-15);
        let sums = s.partial_sums();
        assert_eq!(sums[2], vec![1.5, 2.0, 0.0, 1.0, -2.0, 0.0]);
        assert_eq!(s.running_max_abs(), vec![1.5, 2.0, 1.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn centering_kills_conditional_means() {
        let c = three_level().centered();
        assert!(c.max_conditional_mean() < 1e-15);
    }
}
