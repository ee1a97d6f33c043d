use serde::{Deserialize, Serialize};

use super::kernel::{check_schedule, sup_exceedances};
use crate::cocycle::TrendVerdict;
use crate::error::{domain, Result};
use crate::matrix_walk::MeasureSpec;
use crate::stats::Proportion;

/// Horizons `1, 2, 4, ..., 2^max_power`.
pub fn dyadic_schedule(max_power: u32) -> Vec<usize> {
    (0..=max_power).map(|k| 1usize << k).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub n: usize,
    pub p_hat: Proportion,
    /// Weight times `p_hat` at this horizon.
    pub term: f64,
    /// Interpolated partial sum up to `n`, with bounds from the Wilson limits.
    pub partial_sum: f64,
    pub partial_lo: f64,
    pub partial_hi: f64,
    /// Partial sum gained over the block ending at `n`.
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub rows: Vec<SeriesRow>,
    pub verdict: TrendVerdict,
    pub warnings: Vec<String>,
}

/// Partial sums of `sum_m w(m) p_m`, with `p_m` interpolated linearly between
/// consecutive schedule points (and held at the first value before it).
fn interpolated_sums(schedule: &[usize], p: &[f64], weight: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(schedule.len());
    let mut acc = 0.0;
    let mut prev_n = 0usize;
    for (i, &n) in schedule.iter().enumerate() {
        for m in prev_n + 1..=n {
            let pm = if i == 0 {
                p[0]
            } else {
                let (a, b) = (schedule[i - 1] as f64, n as f64);
                p[i - 1] + (p[i] - p[i - 1]) * (m as f64 - a) / (b - a)
            };
            acc += weight(m as f64) * pm;
        }
        out.push(acc);
        prev_n = n;
    }
    out
}

/// Increments non-increasing over the last half of the schedule (ties allowed,
/// so identically zero series count as convergent).
fn increments_verdict(increments: &[f64]) -> TrendVerdict {
    if increments.len() < 3 {
        return TrendVerdict::Inconclusive;
    }
    let start = increments.len() / 2;
    if increments[start..].windows(2).all(|w| w[1] <= w[0]) {
        TrendVerdict::SummableLooking
    } else {
        TrendVerdict::Diverging
    }
}

fn build_report(
    schedule: &[usize],
    props: Vec<Proportion>,
    weight: &dyn Fn(f64) -> f64,
    warnings: Vec<String>,
) -> SeriesReport {
    let est: Vec<f64> = props.iter().map(|p| p.estimate).collect();
    let lo: Vec<f64> = props.iter().map(|p| p.lo).collect();
    let hi: Vec<f64> = props.iter().map(|p| p.hi).collect();
    let sums = interpolated_sums(schedule, &est, weight);
    let sums_lo = interpolated_sums(schedule, &lo, weight);
    let sums_hi = interpolated_sums(schedule, &hi, weight);
    let increments: Vec<f64> = sums.iter().enumerate().map(|(i, s)| if i == 0 { *s } else { s - sums[i - 1] }).collect();
    let rows = schedule
        .iter()
        .enumerate()
        .map(|(i, &n)| SeriesRow {
            n,
            p_hat: props[i],
            term: weight(n as f64) * est[i],
            partial_sum: sums[i],
            partial_lo: sums_lo[i],
            partial_hi: sums_hi[i],
            increment: increments[i],
        })
        .collect();
    SeriesReport { rows, verdict: increments_verdict(&increments), warnings }
}

/// Partial sums of `sum_n n^{alpha p - 2} sup_x P(max_{k<=n} |S_k - k lambda| > n^alpha y)`.
#[allow(clippy::too_many_arguments)]
pub fn baum_katz_partial(
    spec: &MeasureSpec,
    lambda: f64,
    alpha: f64,
    p: f64,
    y: f64,
    n_schedule: &[usize],
    x_grid: usize,
    reps: u64,
    seed: u64,
) -> Result<SeriesReport> {
    if !(alpha > 0.0 && alpha <= 1.0) || !(p > 0.0) || !(y > 0.0) {
        return Err(domain("need alpha in (0, 1], p > 0 and y > 0"));
    }
    check_schedule(n_schedule)?;
    let mut warnings = Vec::new();
    if alpha <= 0.5 {
        if p == 2.0 && alpha == 0.5 {
            warnings.push("p = 2 with alpha = 1/2 is the excluded boundary case: the series is not expected to converge".into());
        } else {
            warnings.push(format!("alpha = {alpha} is outside (1/2, 1]"));
        }
    }
    if alpha < 1.0 / p {
        warnings.push(format!("alpha = {alpha} < 1/p = {}: outside the complete-convergence hypothesis", 1.0 / p));
    }
    let thresholds: Vec<Vec<f64>> = n_schedule.iter().map(|&n| vec![(n as f64).powf(alpha) * y]).collect();
    let best = sup_exceedances(spec, lambda, x_grid, n_schedule, &thresholds, reps, seed)?;
    let props = best.iter().map(|c| Proportion::wilson(c[0].0, reps)).collect();
    let e = alpha * p - 2.0;
    Ok(build_report(n_schedule, props, &move |m: f64| m.powf(e), warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilReport {
    pub y: f64,
    pub sqrt_v: f64,
    /// `y > sqrt(V)`, where summability is expected.
    pub above_sqrt_v: bool,
    pub series: SeriesReport,
}

/// `sup_x P(max_{k<=n} |S_k - k lambda| > y sqrt(2 n log log n))` per horizon
/// (`n >= 3`) and partial sums of `sum (1/n) p_n`.
#[allow(clippy::too_many_arguments)]
pub fn lil_curve(
    spec: &MeasureSpec,
    lambda: f64,
    v: f64,
    n_schedule: &[usize],
    y: f64,
    x_grid: usize,
    reps: u64,
    seed: u64,
) -> Result<LilReport> {
    if !(y > 0.0) || !(v >= 0.0) {
        return Err(domain("need y > 0 and V >= 0"));
    }
    check_schedule(n_schedule)?;
    if n_schedule[0] < 3 {
        return Err(crate::error::LabError::Range("log log n needs n >= 3".into()));
    }
    let thresholds: Vec<Vec<f64>> = n_schedule
        .iter()
        .map(|&n| {
            let n = n as f64;
            vec![y * (2.0 * n * n.ln().ln()).sqrt()]
        })
        .collect();
    let best = sup_exceedances(spec, lambda, x_grid, n_schedule, &thresholds, reps, seed)?;
    let props = best.iter().map(|c| Proportion::wilson(c[0].0, reps)).collect();
    let sqrt_v = v.sqrt();
    let mut warnings = Vec::new();
    if y <= sqrt_v {
        warnings.push(format!("y = {y} <= sqrt(V) = {sqrt_v}: divergence of the series is expected here"));
    }
    Ok(LilReport {
        y,
        sqrt_v,
        above_sqrt_v: y > sqrt_v,
        series: build_report(n_schedule, props, &|m: f64| 1.0 / m, warnings),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deviation_lab::scalar_maxima;
    use crate::matrix_walk::{MeasureFamily, ScalarLaw, SquareMatrix};

    fn rotation_dirac() -> MeasureSpec {
        MeasureSpec::dirac(SquareMatrix::rotation(2, 0.9).scaled(2.0).unwrap())
    }

    fn coin(step: f64) -> (ScalarLaw, MeasureSpec) {
        let law = ScalarLaw::Discrete { values: vec![step, -step], weights: vec![0.5, 0.5] };
        let spec = MeasureSpec::new(2, MeasureFamily::ScaledRotation { log_scale: law.clone(), uniform_rotation: false, angle: 0.3 }).unwrap();
        (law, spec)
    }

    #[test]
    fn interpolation_by_hand() {
        // Schedule 1, 3 with p = 1, 0 and unit weights: 1 + (1 + 0.5 + 0) = 2.5.
        let s = interpolated_sums(&[1, 3], &[1.0, 0.0], &|_| 1.0);
        assert_eq!(s, vec![1.0, 1.5]);
        let s = interpolated_sums(&[2, 4], &[1.0, 0.0], &|_| 1.0);
        assert_eq!(s, vec![2.0, 2.5]);
    }

    #[test]
    fn zero_fluctuation_series_vanish() {
        let r = baum_katz_partial(&rotation_dirac(), 2f64.ln(), 1.0, 2.0, 0.5, &dyadic_schedule(8), 2, 200, 0).unwrap();
        assert!(r.rows.iter().all(|row| row.partial_sum == 0.0));
        assert_eq!(r.verdict, TrendVerdict::SummableLooking);
        let l = lil_curve(&rotation_dirac(), 2f64.ln(), 0.0, &[4, 16, 64], 1e-6, 2, 200, 0).unwrap();
        assert!(l.series.rows.iter().all(|row| row.p_hat.successes == 0));
        assert!(l.above_sqrt_v);
    }

    #[test]
    fn boundary_case_warns() {
        let r = baum_katz_partial(&rotation_dirac(), 2f64.ln(), 0.5, 2.0, 0.5, &[1, 2, 4], 1, 100, 0).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("excluded boundary")));
        let r = baum_katz_partial(&rotation_dirac(), 2f64.ln(), 0.6, 1.5, 0.5, &[1, 2, 4], 1, 100, 0).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("1/p")));
        let r = baum_katz_partial(&rotation_dirac(), 2f64.ln(), 0.8, 1.5, 0.5, &[1, 2, 4], 1, 100, 0).unwrap();
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn bounded_walk_increments_decrease() {
        let (law, spec) = coin(1.0);
        let sched = dyadic_schedule(10);
        let r = baum_katz_partial(&spec, 0.0, 1.0, 2.0, 0.5, &sched, 1, 4000, 5).unwrap();
        let big: Vec<&SeriesRow> = r.rows.iter().filter(|row| row.n >= 64).collect();
        assert!(big.windows(2).all(|w| w[1].increment <= w[0].increment), "{:?}", big.iter().map(|r| r.increment).collect::<Vec<_>>());
        assert_eq!(r.verdict, TrendVerdict::SummableLooking);
        // Scalar oracle at n = 64: P(max |S_k| > 32).
        let o = scalar_maxima(&law, 0.0, &[64], 4000, 6).unwrap();
        let hits = o.iter().filter(|m| m[0] > 32.0).count() as u64;
        let row = r.rows.iter().find(|row| row.n == 64).unwrap();
        let op = Proportion::wilson(hits, 4000);
        assert!(row.p_hat.lo <= op.hi && op.lo <= row.p_hat.hi);
    }

    #[test]
    fn lil_above_sqrt_v_is_summable_looking() {
        let (_, spec) = coin(2f64.ln());
        let v = 2f64.ln().powi(2);
        let sched: Vec<usize> = (6..=14).map(|k| 1usize << k).collect();
        let l = lil_curve(&spec, 0.0, v, &sched, 1.5 * v.sqrt(), 1, 4000, 3).unwrap();
        assert!(l.above_sqrt_v);
        assert_eq!(l.series.verdict, TrendVerdict::SummableLooking, "{:?}", l.series.rows.iter().map(|r| r.increment).collect::<Vec<_>>());
        let far = lil_curve(&spec, 0.0, v, &sched, 10.0 * v.sqrt(), 1, 4000, 3).unwrap();
        assert!(far.series.rows.iter().all(|r| r.p_hat.successes == 0));
    }
}
