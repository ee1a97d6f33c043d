use super::FiniteAdaptedSpace;
use crate::error::{domain, LabError, Result};

/// `alpha sqrt(n) / sqrt(log log n)`.
pub fn lil_threshold(n: usize, alpha: f64) -> Result<f64> {
    if n < 3 {
        return Err(LabError::Range(format!("log log n needs n >= 3, got {n}")));
    }
    if !(alpha > 0.0) {
        return Err(domain("alpha must be positive"));
    }
    let n = n as f64;
    Ok(alpha * n.sqrt() / n.ln().ln().sqrt())
}

/// `D_k 1{|D_k| <= tau} - m_k`, where `cond_mean(k)` returns the conditional
/// mean of the truncated `k`-th variable (1-based `k`).
pub fn lil_truncate(d_seq: &[f64], mut cond_mean: impl FnMut(usize) -> f64, n: usize, alpha: f64) -> Result<Vec<f64>> {
    let tau = lil_threshold(n, alpha)?;
    Ok(d_seq
        .iter()
        .enumerate()
        .map(|(i, &d)| truncate_at(d, tau) - cond_mean(i + 1))
        .collect())
}

#[inline]
fn truncate_at(d: f64, tau: f64) -> f64 {
    if d.abs() <= tau {
        d
    } else {
        0.0
    }
}

impl FiniteAdaptedSpace {
    /// Truncated and exactly re-centred differences, horizon `n = depth`.
    pub fn lil_truncated(&self, alpha: f64) -> Result<FiniteAdaptedSpace> {
        let tau = lil_threshold(self.depth(), alpha)?;
        let values = (1..=self.depth())
            .map(|k| {
                let t: Vec<f64> = self.values()[k - 1].iter().map(|&d| truncate_at(d, tau)).collect();
                let m = self.lift(&self.cond_expectation(&t, k, k - 1), k - 1, k);
                t.iter().zip(&m).map(|(a, b)| a - b).collect()
            })
            .collect();
        self.with_values(values)
    }
}

/// Conditional means of truncated differences estimated per state bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedTruncationOracle {
    pub threshold: f64,
    pub means: Vec<f64>,
    pub counts: Vec<usize>,
}

impl BinnedTruncationOracle {
    /// `samples` are `(bin of x_{k-1}, D_k)` pairs pooled over trajectories.
    pub fn new(samples: &[(usize, f64)], bins: usize, n: usize, alpha: f64) -> Result<Self> {
        if bins == 0 {
            return Err(domain("need at least one bin"));
        }
        let threshold = lil_threshold(n, alpha)?;
        let mut sums = vec![0.0; bins];
        let mut counts = vec![0usize; bins];
        for &(b, d) in samples {
            if b >= bins {
                return Err(domain(format!("bin {b} out of range")));
            }
            sums[b] += truncate_at(d, threshold);
            counts[b] += 1;
        }
        let means = sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
        Ok(BinnedTruncationOracle { threshold, means, counts })
    }

    pub fn mean(&self, bin: usize) -> f64 {
        self.means[bin]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_and_range() {
        assert!(lil_threshold(2, 1.0).is_err());
        let t = lil_threshold(100, 0.5).unwrap();
        assert!((t - 0.5 * 10.0 / (100f64.ln().ln()).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn small_centred_sequence_is_unchanged() {
        let d = [0.1, -0.2, 0.3];
        assert_eq!(lil_truncate(&d, |_| 0.0, 100, 1.0).unwrap(), d.to_vec());
    }

    #[test]
    fn finite_space_truncation_is_a_martingale_and_bounded() {
        let space = FiniteAdaptedSpace::new(
            vec![3, 3, 3, 3],
            vec![vec![0.7, 0.2, 0.1]; 4],
            vec![
                vec![-1.0, 1.5, 5.0],
                (0..9).map(|i| (i as f64 - 4.0) * 1.3).collect(),
                (0..27).map(|i| ((i * 7) % 11) as f64 - 5.0).collect(),
                (0..81).map(|i| ((i * 5) % 13) as f64 * 0.8 - 4.0).collect(),
            ],
        )
        .unwrap()
        .centered();
        let alpha = 1.0;
        let tau = lil_threshold(4, alpha).unwrap();
        let tr = space.lil_truncated(alpha).unwrap();
        assert!(tr.max_conditional_mean() < 1e-14);
        for level in tr.values() {
            assert!(level.iter().all(|d| d.abs() <= 2.0 * tau));
        }
        // Something was actually cut.
        assert!(space.values().iter().flatten().any(|d| d.abs() > tau));
    }

    #[test]
    fn binned_oracle_bounds_output() {
        let samples: Vec<(usize, f64)> = (0..1000).map(|i| (i % 4, ((i * 37) % 101) as f64 - 50.0)).collect();
        let o = BinnedTruncationOracle::new(&samples, 4, 1000, 0.3).unwrap();
        let bins: Vec<usize> = samples.iter().map(|s| s.0).collect();
        let d: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let out = lil_truncate(&d, |k| o.mean(bins[k - 1]), 1000, 0.3).unwrap();
        assert!(out.iter().all(|x| x.abs() <= 2.0 * o.threshold));
    }
}
