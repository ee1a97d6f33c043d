use serde::{Deserialize, Serialize};

use super::FiniteAdaptedSpace;
use crate::error::{domain, Result};

fn check_positive(gamma: f64, u: f64, v: f64) -> Result<()> {
    if gamma > 0.0 && u > 0.0 && v > 0.0 && gamma.is_finite() && u.is_finite() && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("gamma, u, v must be positive and finite (got {gamma}, {u}, {v})")))
    }
}

/// `exp((gamma/u)(1 - log(gamma u / v)))`.
pub fn haeusler_plain_term(gamma: f64, u: f64, v: f64) -> Result<f64> {
    check_positive(gamma, u, v)?;
    Ok(((gamma / u) * (1.0 - (gamma * u / v).ln())).exp())
}

/// Bound on `P(max_k |M_k| >= gamma)` given `p1 = sum P(|D_i| >= u)` and
/// `p2 = P(sum E(D_i^2 | F_{i-1}) >= v)`.
pub fn haeusler_bound(gamma: f64, u: f64, v: f64, p1: f64, p2: f64) -> Result<f64> {
    if !(p1 >= 0.0 && p2 >= 0.0) {
        return Err(domain("p1 and p2 must be non-negative"));
    }
    Ok(p1 + 2.0 * p2 + 2.0 * haeusler_plain_term(gamma, u, v)?)
}

/// `exp(gamma/u - (gamma/u + v/u^2) log(gamma u / v + 1))`; never exceeds the plain term.
pub fn haeusler_sharp_term(gamma: f64, u: f64, v: f64) -> Result<f64> {
    check_positive(gamma, u, v)?;
    let t = gamma * u / v;
    Ok((gamma / u - (gamma / u + v / (u * u)) * t.ln_1p()).exp())
}

/// The sharp form of the full bound.
pub fn haeusler_sharp_bound(gamma: f64, u: f64, v: f64, p1: f64, p2: f64) -> Result<f64> {
    if !(p1 >= 0.0 && p2 >= 0.0) {
        return Err(domain("p1 and p2 must be non-negative"));
    }
    Ok(p1 + 2.0 * p2 + 2.0 * haeusler_sharp_term(gamma, u, v)?)
}

/// Exact `(P(max |M_k| >= gamma), sum P(|D_i| >= u), P(sum E(D_i^2|F_{i-1}) >= v))`
/// for the martingale whose differences are the space's values.
pub fn haeusler_exact_terms(space: &FiniteAdaptedSpace, gamma: f64, u: f64, v: f64) -> (f64, f64, f64) {
    let n = space.depth();
    let lhs = space.probability(&space.running_max_abs(), n, |m| m >= gamma);
    let p1 = (1..=n).map(|k| space.probability(&space.values()[k - 1], k, |d| d.abs() >= u)).sum();
    let qv = quadratic_variation(space);
    let p2 = space.probability(&qv, n, |q| q >= v);
    (lhs, p1, p2)
}

/// `sum_i E(D_i^2 | F_{i-1})` on the atoms.
pub fn quadratic_variation(space: &FiniteAdaptedSpace) -> Vec<f64> {
    let n = space.depth();
    let mut acc = vec![0.0; space.width(n)];
    for k in 1..=n {
        let sq: Vec<f64> = space.values()[k - 1].iter().map(|d| d * d).collect();
        let ce = space.lift(&space.cond_expectation(&sq, k, k - 1), k - 1, n);
        acc.iter_mut().zip(&ce).for_each(|(a, c)| *a += c);
    }
    acc
}

/// `K = 4p/(p-1) + 8/(2-p)`.
pub fn vbe_constant(p: f64) -> Result<f64> {
    if !(p > 1.0 && p < 2.0) {
        return Err(domain(format!("p must lie in (1, 2), got {p}")));
    }
    Ok(4.0 * p / (p - 1.0) + 8.0 / (2.0 - p))
}

/// `(K / y^p) sum_k ||D_k||_{p,inf}^p`.
pub fn vbe_weak_bound(p: f64, weak_norms: &[f64], y: f64) -> Result<f64> {
    let k = vbe_constant(p)?;
    if !(y > 0.0) {
        return Err(domain("y must be positive"));
    }
    if weak_norms.iter().any(|w| !(*w >= 0.0)) {
        return Err(domain("weak norms must be non-negative"));
    }
    Ok(k / y.powf(p) * weak_norms.iter().map(|w| w.powf(p)).sum::<f64>())
}

/// `c_p = 2^{1/p} p / (p - 1)`.
pub fn c_p(p: f64) -> Result<f64> {
    if !(p > 1.0 && p < 2.0) {
        return Err(domain(format!("p must lie in (1, 2), got {p}")));
    }
    Ok(2f64.powf(1.0 / p) * p / (p - 1.0))
}

/// Parameters of the Hao-Liu complete-convergence bound. The constant `c`
/// exists but is not explicit, so it is always supplied by the caller; the
/// bound is a formula only and is not validated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaoLiuParams {
    pub q: f64,
    pub gamma: f64,
    pub l: u32,
    pub c: f64,
}

impl HaoLiuParams {
    /// Argument at which the dominating tail is evaluated: `lambda / (4 (L + 1))`.
    pub fn tail_argument(&self, lambda: f64) -> f64 {
        lambda / (4.0 * (self.l as f64 + 1.0))
    }

    /// `n tail + C lambda^{-q gamma (L+1)/(q+L)} ||sum E(|D_k|^gamma | F_{k-1})||_q^{q(L+1)/(q+L)}`,
    /// with `tail = P(X > tail_argument(lambda))`.
    pub fn bound(&self, n: u64, lambda: f64, tail: f64, cond_moment_norm: f64) -> Result<f64> {
        if !(self.q > 1.0 && self.gamma > 1.0 && self.gamma <= 2.0 && self.c > 0.0 && lambda > 0.0) {
            return Err(domain("need q > 1, gamma in (1, 2], C > 0 and lambda > 0"));
        }
        let l1 = self.l as f64 + 1.0;
        let e = self.q * l1 / (self.q + self.l as f64);
        Ok(n as f64 * tail + self.c * lambda.powf(-self.gamma * e) * cond_moment_norm.powf(e))
    }
}

/// Exact `||S_n^*||_p` on a finite adapted space.
pub fn maximal_lp_lhs(space: &FiniteAdaptedSpace, p: f64) -> f64 {
    space.lp_norm(&space.running_max_abs(), space.depth(), p)
}

/// `r` with `2^{r-1} <= n < 2^r`.
pub fn dyadic_order(n: usize) -> u32 {
    assert!(n >= 1);
    usize::BITS - n.leading_zeros()
}

/// Right side of the dyadic maximal inequality, with every norm exact.
/// Partial sums beyond `n` are frozen at `S_n` (the sequence is zero-extended).
pub fn maximal_lp_rhs(space: &FiniteAdaptedSpace, p: f64) -> Result<f64> {
    let cp = c_p(p)?;
    let a = 2.0 * cp + 1.0;
    let n = space.depth();
    let r = dyadic_order(n);
    let first: f64 = (1..=n).map(|k| space.moment(&space.values()[k - 1], k, p)).sum::<f64>().powf(1.0 / p);
    let sums = space.partial_sums();
    let mut second = 0.0;
    for j in 0..r {
        let block = 1usize << j;
        let mut acc = 0.0;
        for k in 1..=(1usize << (r - j)) {
            let lo = (k - 1) * block;
            if lo >= n {
                break;
            }
            let hi = (k * block).min(n);
            let diff: Vec<f64> = {
                let s_lo = space.lift(&sums[lo], lo, hi);
                sums[hi].iter().zip(&s_lo).map(|(b, a)| b - a).collect()
            };
            let ce = space.cond_expectation(&diff, hi, lo);
            acc += space.moment(&ce, lo, p);
        }
        second += acc.powf(1.0 / p);
    }
    Ok(a * first + 2f64.powf((p - 1.0) / p) * a * second)
}
