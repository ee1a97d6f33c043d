//! Validity suites that compare the inequalities with exact or simulated left sides.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    haeusler_bound, haeusler_exact_terms, maximal_lp_lhs, maximal_lp_rhs, vbe_weak_bound, FiniteAdaptedSpace,
};
use crate::error::{domain, Result};
use crate::matrix_walk::RngStream;
use crate::parallel::map_indexed;
use crate::stats::Proportion;

/// Largest depth for which every adapted ±1 sequence on the binary tree is enumerated.
pub const FULL_ENUMERATION_DEPTH: usize = 3;

/// Which adapted ±1 sequences a maximal-inequality run covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnumerationScope {
    /// Every adapted ±1 table.
    Full,
    /// Every sequence with `X_k` a function of the `k`-th coin only (`4^n`),
    /// plus uniformly random node assignments.
    CoinFunctionsPlusRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalSuiteReport {
    pub n: usize,
    pub p: f64,
    pub scope: EnumerationScope,
    pub configurations: u64,
    pub violations: u64,
    /// `max lhs / rhs` over the configurations.
    pub worst_ratio: f64,
    /// `(2 c_p + 1) n^{1/p} >= n`. Since `S_n^* <= n` for ±1 sequences and the
    /// first term of the right side equals `(2 c_p + 1) n^{1/p}`, this proves
    /// the inequality for every adapted ±1 sequence of length `n`.
    pub certified_all: bool,
}

/// Space whose `X_k` is the ±1 table read from bits `offset_k..offset_k + 2^k`.
fn prefix_space(n: usize, bits: impl Fn(usize) -> bool) -> FiniteAdaptedSpace {
    let mut values = Vec::with_capacity(n);
    let mut offset = 0;
    for k in 1..=n {
        let width = 1usize << k;
        values.push((0..width).map(|i| if bits(offset + i) { 1.0 } else { -1.0 }).collect());
        offset += width;
    }
    FiniteAdaptedSpace::binary(values).expect("valid binary tree")
}

fn check(space: &FiniteAdaptedSpace, p: f64) -> Result<(bool, f64)> {
    let lhs = maximal_lp_lhs(space, p);
    let rhs = maximal_lp_rhs(space, p)?;
    Ok((lhs <= rhs + 1e-12, lhs / rhs))
}

/// Checks `||S_n^*||_p <= rhs` for adapted ±1 sequences on the fair binary tree.
///
/// A ±1 sequence is adapted when `X_k` is any ±1 function of the first `k`
/// coins, giving `2^{2 + 4 + ... + 2^n}` sequences. Up to
/// [`FULL_ENUMERATION_DEPTH`] all of them are enumerated; beyond, the
/// coin-function family and `random` random tables are checked numerically and
/// the whole class is covered by the `certified_all` argument.
pub fn maximal_suite(n: usize, p: f64, random: u64, seed: u64) -> Result<MaximalSuiteReport> {
    if n == 0 || n > 16 {
        return Err(domain("depth must be in 1..=16"));
    }
    let certified_all = (2.0 * super::c_p(p)? + 1.0) * (n as f64).powf(1.0 / p) >= n as f64;
    let fold = |results: Vec<(bool, f64)>| {
        results.iter().fold((0u64, 0.0f64), |(v, w), &(ok, r)| (v + u64::from(!ok), w.max(r)))
    };
    if n <= FULL_ENUMERATION_DEPTH {
        let bits_total = (1usize << (1 + n)) - 2;
        let count = 1u64 << bits_total;
        let results = map_indexed(count, |c| check(&prefix_space(n, |b| (c >> b) & 1 == 1), p))?;
        let (violations, worst_ratio) = fold(results);
        return Ok(MaximalSuiteReport {
            n,
            p,
            scope: EnumerationScope::Full,
            configurations: count,
            violations,
            worst_ratio,
            certified_all,
        });
    }
    let family = 1u64 << (2 * n);
    let results = map_indexed(family + random, |c| {
        if c < family {
            // Two bits per level: sign and whether X_k follows the k-th coin.
            let values = (1..=n)
                .map(|k| {
                    let code = (c >> (2 * (k - 1))) & 3;
                    let sign = if code & 1 == 1 { 1.0 } else { -1.0 };
                    let follows = code & 2 == 2;
                    (0..1usize << k)
                        .map(|i| if follows { if i & 1 == 0 { sign } else { -sign } } else { sign })
                        .collect()
                })
                .collect();
            check(&FiniteAdaptedSpace::binary(values)?, p)
        } else {
            let mut rng = RngStream::new(seed, c - family);
            let total = (1usize << (1 + n)) - 2;
            let bits: Vec<bool> = (0..total).map(|_| rng.random()).collect();
            check(&prefix_space(n, |b| bits[b]), p)
        }
    })?;
    let (violations, worst_ratio) = fold(results);
    Ok(MaximalSuiteReport {
        n,
        p,
        scope: EnumerationScope::CoinFunctionsPlusRandom,
        configurations: family + random,
        violations,
        worst_ratio,
        certified_all,
    })
}

/// Random martingale on a product space: uniform-ish level probabilities and
/// centred values with scales varying by prefix.
pub fn random_martingale_space(branching: &[usize], seed: u64) -> Result<FiniteAdaptedSpace> {
    let mut rng = RngStream::auxiliary(seed, 0x4A);
    let probs: Vec<Vec<f64>> = branching
        .iter()
        .map(|&b| {
            let raw: Vec<f64> = (0..b).map(|_| 0.2 + rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        })
        .collect();
    let mut width = 1;
    let values = branching
        .iter()
        .map(|&b| {
            width *= b;
            (0..width)
                .map(|_| {
                    let heavy = rng.random::<f64>() < 0.1;
                    let x: f64 = rng.random_range(-1.0..1.0);
                    if heavy { 4.0 * x } else { x }
                })
                .collect()
        })
        .collect();
    Ok(FiniteAdaptedSpace::new(branching.to_vec(), probs, values)?.centered())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaeuslerSuiteReport {
    pub spaces: usize,
    pub checks: u64,
    pub violations: u64,
    /// `min (bound - lhs)` over all checks.
    pub min_slack: f64,
}

/// `size` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![lo];
    }
    (0..size).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (size - 1) as f64).exp()).collect()
}

/// Exact left side against the plain bound with exact `p1`, `p2`.
pub fn haeusler_suite(spaces: &[FiniteAdaptedSpace], gammas: &[f64], us: &[f64], vs: &[f64]) -> Result<HaeuslerSuiteReport> {
    let mut report = HaeuslerSuiteReport { spaces: spaces.len(), checks: 0, violations: 0, min_slack: f64::INFINITY };
    for space in spaces {
        for &g in gammas {
            for &u in us {
                for &v in vs {
                    let (lhs, p1, p2) = haeusler_exact_terms(space, g, u, v);
                    let bound = haeusler_bound(g, u, v, p1, p2)?;
                    report.checks += 1;
                    if lhs > bound {
                        report.violations += 1;
                    }
                    report.min_slack = report.min_slack.min(bound - lhs);
                }
            }
        }
    }
    Ok(report)
}

/// Conditionally symmetric martingale with weak-`L^p` increments:
/// `D_k = e_k s_k W_k`, Rademacher `e_k`, Pareto `W_k` with `P(W > t) = t^{-p}`
/// on `t >= 1`, and predictable scale `s_k = scale` after a `+` sign
/// (and for `k = 1`), `scale / 2` after a `-` sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavySymmetricMartingale {
    pub p: f64,
    pub n: usize,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VbeRow {
    pub y: f64,
    pub p_hat: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
}

impl HeavySymmetricMartingale {
    pub fn new(p: f64, n: usize, scale: f64) -> Result<Self> {
        if !(p > 1.0 && p < 2.0) || n == 0 || !(scale > 0.0) {
            return Err(domain("need p in (1, 2), n >= 1 and a positive scale"));
        }
        Ok(HeavySymmetricMartingale { p, n, scale })
    }

    /// Exact `||D_k||_{p,inf}`: `scale` for `k = 1`; afterwards `|D_k|` mixes
    /// `scale W` and `scale W / 2` equally, so `t^p P(|D_k| > t)` is
    /// `scale^p (1 + 2^{-p}) / 2` for every `t >= scale / 2`.
    pub fn exact_weak_norms(&self) -> Vec<f64> {
        let later = self.scale * ((1.0 + 2f64.powf(-self.p)) / 2.0).powf(1.0 / self.p);
        (0..self.n).map(|k| if k == 0 { self.scale } else { later }).collect()
    }

    /// Running maxima `max_k |M_k|` of `reps` independent paths.
    pub fn simulate_maxima(&self, reps: u64, seed: u64) -> Result<Vec<f64>> {
        map_indexed(reps, |r| {
            let mut rng = RngStream::new(seed, r);
            let (mut m, mut best, mut s) = (0.0f64, 0.0f64, self.scale);
            for _ in 0..self.n {
                let w = (1.0 - rng.random::<f64>()).powf(-1.0 / self.p);
                let plus: bool = rng.random();
                m += if plus { s * w } else { -s * w };
                best = best.max(m.abs());
                s = if plus { self.scale } else { self.scale / 2.0 };
            }
            Ok(best)
        })
    }

    /// Empirical `P(max |M_k| >= y)` next to the weak von Bahr-Esseen bound.
    pub fn check(&self, ys: &[f64], reps: u64, seed: u64) -> Result<Vec<VbeRow>> {
        let maxima = self.simulate_maxima(reps, seed)?;
        let norms = self.exact_weak_norms();
        ys.iter()
            .map(|&y| {
                let hits = maxima.iter().filter(|&&m| m >= y).count() as u64;
                let prop = Proportion::wilson(hits, reps);
                Ok(VbeRow {
                    y,
                    p_hat: prop.estimate,
                    std_error: prop.std_error(),
                    ci_lo: prop.lo,
                    ci_hi: prop.hi,
                    bound: vbe_weak_bound(self.p, &norms, y)?,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mg_tools::weak_lp_norm_trimmed;

    #[test]
    fn full_enumeration_small_depths() {
        for n in 1..=FULL_ENUMERATION_DEPTH {
            let r = maximal_suite(n, 1.5, 0, 0).unwrap();
            assert_eq!(r.scope, EnumerationScope::Full);
            assert_eq!(r.configurations, 1u64 << ((1 << (n + 1)) - 2));
            assert_eq!(r.violations, 0);
            assert!(r.worst_ratio > 0.0 && r.worst_ratio < 1.0);
            assert!(r.certified_all);
        }
    }

    #[test]
    fn prefix_space_covers_every_adapted_table() {
        // Depth 2: 2 + 4 bits, and every table appears once.
        let mut seen = std::collections::HashSet::new();
        for c in 0..64u64 {
            let s = prefix_space(2, |b| (c >> b) & 1 == 1);
            seen.insert(format!("{:?}", s.values()));
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn sampled_scope_for_larger_depths() {
        let r = maximal_suite(5, 1.1, 200, 1).unwrap();
        assert_eq!(r.scope, EnumerationScope::CoinFunctionsPlusRandom);
        assert_eq!(r.configurations, 1024 + 200);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn random_spaces_are_martingales() {
        let s = random_martingale_space(&[2, 3, 2], 3).unwrap();
        assert!(s.max_conditional_mean() < 1e-14);
    }

    #[test]
    fn haeusler_holds_on_small_grid() {
        let spaces = vec![random_martingale_space(&[2; 6], 1).unwrap(), random_martingale_space(&[3; 4], 2).unwrap()];
        let g = log_grid(0.3, 6.0, 5);
        let r = haeusler_suite(&spaces, &g, &log_grid(0.2, 4.0, 5), &log_grid(0.2, 10.0, 5)).unwrap();
        assert_eq!(r.checks, 2 * 125);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn weak_norms_match_sampled_increments() {
        let mart = HeavySymmetricMartingale::new(1.5, 2, 0.5).unwrap();
        let exact = mart.exact_weak_norms();
        let mut rng = RngStream::new(2, 0);
        let xs: Vec<f64> = (0..400_000)
            .map(|_| {
                let w = (1.0 - rng.random::<f64>()).powf(-1.0 / 1.5);
                let s = if rng.random::<bool>() { 0.5 } else { 0.25 };
                s * w
            })
            .collect();
        let est = weak_lp_norm_trimmed(&xs, 1.5, 500).unwrap().value;
        assert!((est - exact[1]).abs() / exact[1] < 0.05, "{est} vs {}", exact[1]);
    }

    #[test]
    fn vbe_bound_holds_small_run() {
        let mart = HeavySymmetricMartingale::new(1.5, 16, 0.05).unwrap();
        for row in mart.check(&[0.5, 1.0, 2.0], 20_000, 7).unwrap() {
            assert!(row.p_hat <= row.bound + 3.0 * row.std_error, "{row:?}");
        }
    }
}
