use serde::{Deserialize, Serialize};

use super::kernel::sup_exceedances;
use crate::error::{domain, invariant, LabError, Result};
use crate::matrix_walk::MeasureSpec;
use crate::stats::Proportion;

/// Largest integer node used when `b_n` is given in power form.
const MAX_NODE: f64 = 9.007_199_254_740_992e15;

/// Moderate deviation speed `b_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BnSpec {
    /// `b_n = n^alpha`, `alpha` in (1/2, 1).
    Power { alpha: f64 },
    /// `b_1, b_2, ...` listed explicitly.
    Table { values: Vec<f64> },
}

impl BnSpec {
    /// Checks that `m^2 / b_m^2` and `b_m^2` increase strictly and that
    /// `m / b_m^2` decreases towards zero on the representable range.
    pub fn validate(&self) -> Result<()> {
        match self {
            BnSpec::Power { alpha } => {
                if !(*alpha > 0.5 && *alpha < 1.0) {
                    return Err(invariant(format!(
                        "b_n = n^alpha needs alpha in (1/2, 1) so that n/b_n^2 -> 0 and n^2/b_n^2 increases; got {alpha}"
                    )));
                }
                Ok(())
            }
            BnSpec::Table { values } => {
                if values.len() < 2 {
                    return Err(invariant("b_n table needs at least two entries"));
                }
                if values.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
                    return Err(invariant("b_n entries must be positive and finite"));
                }
                let f = |m: usize| (m as f64 / values[m - 1]).powi(2);
                let g = |m: usize| values[m - 1].powi(2);
                let h = |m: usize| m as f64 / values[m - 1].powi(2);
                for m in 1..values.len() {
                    if f(m + 1) <= f(m) {
                        return Err(invariant(format!("n^2/b_n^2 is not strictly increasing at n = {m}")));
                    }
                    if g(m + 1) <= g(m) {
                        return Err(invariant(format!("b_n^2 is not strictly increasing at n = {m}")));
                    }
                    if h(m + 1) > h(m) {
                        return Err(invariant(format!("n/b_n^2 increases at n = {m}")));
                    }
                }
                if h(values.len()) >= h(1) {
                    return Err(invariant("n/b_n^2 does not decrease over the table"));
                }
                Ok(())
            }
        }
    }

    /// `b_n` at an integer node.
    pub fn b(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(domain("b_n is defined for n >= 1"));
        }
        match self {
            BnSpec::Power { alpha } => Ok((n as f64).powf(*alpha)),
            BnSpec::Table { values } => values
                .get(n - 1)
                .copied()
                .ok_or_else(|| LabError::Range(format!("n = {n} is beyond the b_n table (length {})", values.len()))),
        }
    }

    fn last_node(&self) -> f64 {
        match self {
            BnSpec::Power { .. } => MAX_NODE,
            BnSpec::Table { values } => values.len() as f64,
        }
    }

    /// `f(m) = m^2 / b_m^2`.
    fn f_node(&self, m: usize) -> Result<f64> {
        Ok((m as f64 / self.b(m)?).powi(2))
    }

    /// `g(m) = b_m^2`.
    fn g_node(&self, m: usize) -> Result<f64> {
        Ok(self.b(m)?.powi(2))
    }

    /// Piecewise-linear interpolation of node values at real `x >= 1`.
    fn interpolate(&self, x: f64, node: impl Fn(usize) -> Result<f64>) -> Result<f64> {
        if !(x >= 1.0) {
            return Err(domain("argument must be at least 1"));
        }
        let m = x.floor();
        if m >= self.last_node() {
            if x == m {
                return node(m as usize);
            }
            return Err(LabError::Range(format!("{x} is beyond the last node")));
        }
        let lo = node(m as usize)?;
        if x == m {
            return Ok(lo);
        }
        let hi = node(m as usize + 1)?;
        Ok(lo + (x - m) * (hi - lo))
    }
}

/// `c(x) = f^{-1}(g(x))` with `f`, `g` the piecewise-linear interpolants of
/// `m -> m^2/b_m^2` and `m -> b_m^2`.
pub fn c_of_n(bn: &BnSpec, x: f64) -> Result<f64> {
    bn.validate()?;
    let target = bn.interpolate(x, |m| bn.g_node(m))?;
    let f = |m: usize| bn.f_node(m);
    if target <= f(1)? {
        if target == f(1)? {
            return Ok(1.0);
        }
        return Err(LabError::Range(format!("g({x}) = {target} lies below f(1)")));
    }
    // Exponential then binary search for the segment [m, m+1] containing the target.
    let last = bn.last_node();
    let mut hi = 2.0f64;
    while hi < last && f(hi as usize)? < target {
        hi = (hi * 2.0).min(last);
    }
    if f(hi as usize)? < target {
        return Err(LabError::Range(format!("c({x}) exceeds the representable node range")));
    }
    let mut lo = (hi / 2.0).floor().max(1.0);
    while hi - lo > 1.0 {
        let mid = ((lo + hi) / 2.0).floor();
        if f(mid as usize)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f(lo as usize)?, f(hi as usize)?);
    if fhi == target {
        return Ok(hi);
    }
    Ok(lo + (target - flo) / (fhi - flo))
}

/// Piecewise-linear path on `[0, 1]`; held constant after the last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpPath {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl MdpPath {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(domain("path needs equally many knots and values"));
        }
        if knots[0] != 0.0 {
            return Err(invariant("first knot must be t = 0"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) || *knots.last().expect("non-empty") > 1.0 {
            return Err(invariant("knots must increase strictly within [0, 1]"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("path values must be finite"));
        }
        Ok(MdpPath { knots, values })
    }

    /// `h(t) = slope t` on `[0, 1]`.
    pub fn linear(slope: f64) -> Self {
        MdpPath { knots: vec![0.0, 1.0], values: vec![0.0, slope] }
    }
}

/// `I_V(h) = (1/2V) int_0^1 h'(u)^2 du`, `+inf` when `h(0) != 0`. With `V = 0`
/// the identically zero path gets 0 and every other path `+inf`.
pub fn mdp_rate(path: &MdpPath, v: f64) -> Result<f64> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(domain("V must be finite and non-negative"));
    }
    if path.values[0] != 0.0 {
        return Ok(f64::INFINITY);
    }
    if v == 0.0 {
        return Ok(if path.values.iter().all(|&x| x == 0.0) { 0.0 } else { f64::INFINITY });
    }
    let energy: f64 = path
        .knots
        .windows(2)
        .zip(path.values.windows(2))
        .map(|(t, h)| {
            let dt = t[1] - t[0];
            (h[1] - h[0]).powi(2) / dt
        })
        .sum();
    Ok(energy / (2.0 * v))
}

/// `-y^2 / (2V)`.
pub fn mdp_target(y: f64, v: f64) -> Result<f64> {
    if !(y > 0.0 && v > 0.0) {
        return Err(domain("need y > 0 and V > 0"));
    }
    Ok(-y * y / (2.0 * v))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpRow {
    pub n: usize,
    pub b_n: f64,
    pub p_hat: Proportion,
    /// `(n / b_n^2) log p_hat`, absent for censored cells.
    pub value: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    /// `p_hat = 0`: only `value <= hi` (rule of three) is known.
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpComparison {
    pub y: f64,
    pub v: f64,
    pub target: f64,
    pub rows: Vec<MdpRow>,
}

/// `(n / b_n^2) log` transform of a proportion with its interval; zero counts
/// are censored at the rule-of-three bound.
pub(crate) fn log_rate_row(p: Proportion, factor: f64) -> (Option<f64>, f64, f64, bool) {
    if p.successes == 0 {
        (None, f64::NEG_INFINITY, factor * p.rule_of_three().ln(), true)
    } else {
        (Some(factor * p.estimate.ln()), factor * p.lo.ln(), factor * p.hi.ln(), false)
    }
}

/// Empirical `(n/b_n^2) log sup_x P(max_k |S_k - k lambda| > b_n y)` along the schedule.
#[allow(clippy::too_many_arguments)]
pub fn mdp_compare(
    spec: &MeasureSpec,
    lambda: f64,
    v: f64,
    bn: &BnSpec,
    y: f64,
    n_schedule: &[usize],
    x_grid: usize,
    reps: u64,
    seed: u64,
) -> Result<MdpComparison> {
    bn.validate()?;
    let target = mdp_target(y, v)?;
    let b: Vec<f64> = n_schedule.iter().map(|&n| bn.b(n)).collect::<Result<_>>()?;
    let thresholds: Vec<Vec<f64>> = b.iter().map(|bn| vec![bn * y]).collect();
    let best = sup_exceedances(spec, lambda, x_grid, n_schedule, &thresholds, reps, seed)?;
    let rows = n_schedule
        .iter()
        .zip(&b)
        .zip(&best)
        .map(|((&n, &b_n), cell)| {
            let p = Proportion::wilson(cell[0].0, reps);
            let (value, lo, hi, censored) = log_rate_row(p, n as f64 / (b_n * b_n));
            MdpRow { n, b_n, p_hat: p, value, lo, hi, censored }
        })
        .collect();
    Ok(MdpComparison { y, v, target, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionVerdict {
    Satisfied,
    NotSatisfied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArconesRow {
    pub n: usize,
    pub b_n: f64,
    pub tail: f64,
    /// `(n/b_n^2) log(n) tail(b_n)`, the product as displayed.
    pub product: f64,
    /// `(n/b_n^2) log(n tail(b_n))`; `-inf` when the tail vanishes.
    pub log_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArconesReport {
    pub rows: Vec<ArconesRow>,
    /// Judged on `log_form`.
    pub verdict: ConditionVerdict,
    /// Whether the displayed product tends to `-inf`; it is non-negative, so never.
    pub product_diverges: bool,
}

/// Divergence to `-inf` is declared when the sequence is non-increasing over
/// the last half of the schedule and ends at or below this level.
pub const DIVERGENCE_LEVEL: f64 = -10.0;

/// Tail condition on `log N`: `(n / b_n^2) log n mu{log N > b_n}` along the schedule.
pub fn arcones_check(tail: impl Fn(f64) -> f64, bn: &BnSpec, n_schedule: &[usize]) -> Result<ArconesReport> {
    bn.validate()?;
    super::kernel::check_schedule(n_schedule)?;
    let rows: Vec<ArconesRow> = n_schedule
        .iter()
        .map(|&n| {
            let b_n = bn.b(n)?;
            let t = tail(b_n);
            if !(0.0..=1.0).contains(&t) {
                return Err(domain(format!("tail probability {t} at {b_n} is not in [0, 1]")));
            }
            let factor = n as f64 / (b_n * b_n);
            let ln_n = (n as f64).ln();
            let log_form = if t == 0.0 { f64::NEG_INFINITY } else { factor * (ln_n + t.ln()) };
            Ok(ArconesRow { n, b_n, tail: t, product: factor * ln_n * t, log_form })
        })
        .collect::<Result<_>>()?;
    let verdict = if diverges_down(&rows.iter().map(|r| r.log_form).collect::<Vec<_>>()) {
        ConditionVerdict::Satisfied
    } else {
        ConditionVerdict::NotSatisfied
    };
    Ok(ArconesReport { rows, verdict, product_diverges: false })
}

fn diverges_down(seq: &[f64]) -> bool {
    let half = &seq[seq.len() / 2..];
    let last = *seq.last().expect("non-empty");
    half.windows(2).all(|w| w[1] <= w[0] || w[1] == f64::NEG_INFINITY) && last <= DIVERGENCE_LEVEL
}

/// Sub-exponential sufficient condition for `b_n = n^alpha`:
/// `mu{log N > x} <= exp(-x^beta a(x))` with `beta = 2 - 1/alpha` and `a(x) -> inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubexpReport {
    pub beta: f64,
    /// `(x, tail(x), a_needed(x) = -log tail(x) / x^beta, a(x), holds)`.
    pub rows: Vec<(f64, f64, f64, f64, bool)>,
    pub holds_everywhere: bool,
    /// `a` is increasing over the grid and ends above its start.
    pub a_grows: bool,
}

pub fn subexp_check(alpha: f64, tail: impl Fn(f64) -> f64, a: impl Fn(f64) -> f64, x_grid: &[f64]) -> Result<SubexpReport> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(domain("alpha must lie in (1/2, 1)"));
    }
    if x_grid.is_empty() || x_grid.iter().any(|x| !(*x > 0.0)) {
        return Err(domain("x grid must be non-empty and positive"));
    }
    let beta = 2.0 - 1.0 / alpha;
    let rows: Vec<(f64, f64, f64, f64, bool)> = x_grid
        .iter()
        .map(|&x| {
            let t = tail(x);
            let needed = if t == 0.0 { f64::INFINITY } else { -t.ln() / x.powf(beta) };
            let ax = a(x);
            (x, t, needed, ax, t <= (-x.powf(beta) * ax).exp())
        })
        .collect();
    let a_vals: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let a_grows = a_vals.windows(2).all(|w| w[1] >= w[0]) && a_vals.last() > a_vals.first();
    Ok(SubexpReport { beta, holds_everywhere: rows.iter().all(|r| r.4), a_grows, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_walk::{MeasureFamily, ScalarLaw, SquareMatrix};

    #[test]
    fn bn_validation() {
        assert!(BnSpec::Power { alpha: 0.75 }.validate().is_ok());
        assert!(matches!(BnSpec::Power { alpha: 0.5 }.validate(), Err(LabError::Invariant(_))));
        assert!(BnSpec::Power { alpha: 1.0 }.validate().is_err());
        let table: Vec<f64> = (1..=50).map(|n| (n as f64).powf(0.7)).collect();
        assert!(BnSpec::Table { values: table.clone() }.validate().is_ok());
        let mut bad = table;
        bad[10] = bad[9];
        assert!(BnSpec::Table { values: bad }.validate().is_err());
        assert!(matches!(BnSpec::Table { values: vec![1.0, 2.0] }.b(3), Err(LabError::Range(_))));
    }

    #[test]
    fn c_of_n_cubes_for_three_quarters() {
        let bn = BnSpec::Power { alpha: 0.75 };
        for n in 1..=20usize {
            let c = c_of_n(&bn, n as f64).unwrap();
            let expected = (n * n * n) as f64;
            assert!((c - expected).abs() <= 1e-9 * expected, "n={n}: {c}");
        }
        // Strictly increasing between nodes too.
        let cs: Vec<f64> = (0..100).map(|i| c_of_n(&bn, 1.0 + i as f64 * 0.19).unwrap()).collect();
        assert!(cs.windows(2).all(|w| w[1] > w[0]));
        assert!(c_of_n(&BnSpec::Power { alpha: 0.5 }, 3.0).is_err());
    }

    #[test]
    fn c_of_n_closed_form_at_integer_nodes() {
        // alpha = 2/3: c(n) = n^2 exactly.
        let bn = BnSpec::Power { alpha: 2.0 / 3.0 };
        for n in 2..=30usize {
            let c = c_of_n(&bn, n as f64).unwrap();
            assert!((c - (n * n) as f64).abs() <= 1e-9 * (n * n) as f64);
        }
    }

    #[test]
    fn c_of_n_range_error_for_short_table() {
        let table: Vec<f64> = (1..=30).map(|n| (n as f64).powf(0.75)).collect();
        let bn = BnSpec::Table { values: table };
        assert!((c_of_n(&bn, 3.0).unwrap() - 27.0).abs() < 1e-9);
        assert!(matches!(c_of_n(&bn, 4.0), Err(LabError::Range(_))));
    }

    #[test]
    fn rate_function_examples() {
        assert_eq!(mdp_rate(&MdpPath::linear(2.0), 1.0).unwrap(), 2.0);
        let shifted = MdpPath::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(mdp_rate(&shifted, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(mdp_rate(&MdpPath::linear(0.0), 1.0).unwrap(), 0.0);
        assert_eq!(mdp_rate(&MdpPath::linear(0.0), 0.0).unwrap(), 0.0);
        assert_eq!(mdp_rate(&MdpPath::linear(1.0), 0.0).unwrap(), f64::INFINITY);
        for (y, v) in [(1.0, 1.0), (0.3, 2.5), (2.0, 0.7)] {
            assert_eq!(mdp_rate(&MdpPath::linear(y), v).unwrap(), y * y / (2.0 * v));
        }
        // Kinked path: slopes 2 on [0, .5] and 0 after.
        let kink = MdpPath::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert!((mdp_rate(&kink, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(MdpPath::new(vec![0.1, 1.0], vec![0.0, 1.0]).is_err());
        assert!(MdpPath::new(vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 1.0]).is_err());
        assert_eq!(mdp_target(2.0, 1.0).unwrap(), -2.0);
    }

    #[test]
    fn arcones_examples() {
        let bn = BnSpec::Power { alpha: 0.75 };
        let sched: Vec<usize> = (4..=20).map(|k| 1usize << k).collect();
        let finite = arcones_check(|t| if t > 5.0 { 0.0 } else { 0.5 }, &bn, &sched).unwrap();
        assert_eq!(finite.verdict, ConditionVerdict::Satisfied);
        let expo = arcones_check(|t| (-t).exp(), &bn, &sched).unwrap();
        assert_eq!(expo.verdict, ConditionVerdict::Satisfied);
        for r in &expo.rows {
            let n = r.n as f64;
            assert!((r.product - n.powf(-0.5) * n.ln() * (-n.powf(0.75)).exp()).abs() < 1e-300_f64.max(1e-12 * r.product));
        }
        let poly = arcones_check(|t| if t < 1.0 { 1.0 } else { t.powi(-2) }, &bn, &sched).unwrap();
        assert_eq!(poly.verdict, ConditionVerdict::NotSatisfied);
        assert!(poly.rows.last().unwrap().product < 1e-4);
        assert!(!poly.product_diverges);
    }

    #[test]
    fn subexp_condition() {
        let alpha = 0.75;
        let r = subexp_check(alpha, |x| (-x.powf(0.5)).exp(), |x| x.ln().max(0.0), &[2.0, 10.0, 100.0]).unwrap();
        assert!((r.beta - 2.0 / 3.0).abs() < 1e-15);
        assert!(!r.holds_everywhere);
        let r = subexp_check(alpha, |x| (-x).exp(), |x| x.powf(0.1), &[1.5, 10.0, 100.0, 1000.0]).unwrap();
        assert!(r.holds_everywhere && r.a_grows);
    }

    #[test]
    fn mdp_compare_censors_zero_fluctuation() {
        let spec = MeasureSpec::dirac(SquareMatrix::rotation(2, 0.4).scaled(2.0).unwrap());
        let c = mdp_compare(&spec, 2f64.ln(), 1.0, &BnSpec::Power { alpha: 0.6 }, 1.0, &[16, 64], 2, 200, 0).unwrap();
        assert!(c.rows.iter().all(|r| r.censored && r.value.is_none()));
        assert!((c.rows[0].hi - (16f64.powf(-0.2) * (3.0f64 / 200.0).ln())).abs() < 1e-12);
    }

    #[test]
    fn mdp_compare_scalar_walk_moves_toward_target() {
        let law = ScalarLaw::Discrete { values: vec![1.0, -1.0], weights: vec![0.5, 0.5] };
        let spec = MeasureSpec::new(2, MeasureFamily::ScaledRotation { log_scale: law, uniform_rotation: false, angle: 0.0 }).unwrap();
        let c = mdp_compare(&spec, 0.0, 1.0, &BnSpec::Power { alpha: 0.6 }, 1.0, &[256, 1024], 1, 20_000, 3).unwrap();
        assert_eq!(c.target, -0.5);
        for r in &c.rows {
            let v = r.value.unwrap();
            assert!(v < 0.0 && v > -1.5, "{r:?}");
        }
    }
}
