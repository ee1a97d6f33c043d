//! Small statistical helpers shared by the estimators.

use serde::{Deserialize, Serialize};

/// Two-sided normal quantile used for all reported confidence intervals (95%).
pub const Z_95: f64 = 1.959_963_984_540_054;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean of independent samples.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the mean via non-overlapping batch means.
///
/// Falls back to the plain standard error when there are fewer samples than batches.
pub fn batch_means_error(xs: &[f64], batches: usize) -> f64 {
    let batches = batches.max(2);
    if xs.len() < 2 * batches {
        return std_error(xs);
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&xs[b * size..(b + 1) * size]))
        .collect();
    std_error(&means)
}

/// Binomial proportion with a Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Proportion {
    pub fn wilson(successes: u64, trials: u64) -> Self {
        assert!(trials > 0, "proportion over zero trials");
        assert!(successes <= trials);
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        let (mut lo, mut hi) = ((centre - half).max(0.0), (centre + half).min(1.0));
        if successes == 0 {
            lo = 0.0;
        }
        if successes == trials {
            hi = 1.0;
        }
        Proportion { successes, trials, estimate: p, lo, hi }
    }

    /// Rule-of-three one-sided upper bound, used for censored (zero-count) cells.
    pub fn rule_of_three(&self) -> f64 {
        (3.0 / self.trials as f64).min(1.0)
    }

    /// Binomial standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

/// Ordinary least squares fit of `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Some(LineFit { slope, intercept, r_squared })
}

/// Kolmogorov-Smirnov distance between the sample and the uniform law on [0, 1].
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 5% critical value of the one-sample KS statistic.
pub fn ks_critical_5pct(n: usize) -> f64 {
    1.358 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_contains_estimate() {
        let p = Proportion::wilson(30, 100);
        assert!(p.lo < 0.3 && 0.3 < p.hi);
        assert!((p.lo - 0.2189).abs() < 1e-3, "{}", p.lo);
        assert!((p.hi - 0.3958).abs() < 1e-3, "{}", p.hi);
        let z = Proportion::wilson(0, 1000);
        assert_eq!(z.lo, 0.0);
        assert!((z.rule_of_three() - 0.003).abs() < 1e-15);
    }

    #[test]
    fn exact_line_is_recovered() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 2.0 * x).collect();
        let fit = least_squares(&xs, &ys).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-14);
        assert!((fit.intercept - 1.5).abs() < 1e-14);
        assert!((fit.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ks_of_regular_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_uniform(&xs) <= 0.5 / 1000.0 + 1e-12);
    }

    #[test]
    fn batch_means_matches_plain_for_iid_constant() {
        let xs = vec![2.0; 100];
        assert_eq!(batch_means_error(&xs, 10), 0.0);
        assert_eq!(mean(&xs), 2.0);
    }
}
