//! Cocycles over the projective chain: Lyapunov exponent and asymptotic
//! variance estimation, occupation measures, Gordin-type summability and
//! `sigma*` diagnostics.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invariant, LabError, Result};
use crate::matrix_walk::{direction_grid, GroupElement, MeasureSpec, ProjectivePoint, RngStream, SquareMatrix, AUX_DOMAIN};
use crate::parallel::map_indexed;
use crate::stats::{batch_means_error, least_squares, mean, std_error};

/// Absolute tolerance for the cocycle identity on registration probes.
pub const REGISTRATION_TOL: f64 = 1e-8;
const REGISTRATION_PROBES: usize = 64;
const LAMBDA_BATCHES: usize = 32;
const OCCUPATION_BATCHES: usize = 50;

/// A cocycle `sigma: G x X -> R`, i.e. `sigma(g g', u) = sigma(g, g'.u) + sigma(g', u)`.
pub trait Cocycle: Send + Sync {
    fn label(&self) -> &str;

    fn evaluate(&self, g: &GroupElement, u: &ProjectivePoint) -> f64;

    /// Cocycle value and `g . u` together.
    fn step(&self, g: &GroupElement, u: &ProjectivePoint) -> (f64, ProjectivePoint) {
        (self.evaluate(g, u), g.act(u))
    }

    /// `sup_u |sigma(g, u)|` when known in closed form.
    fn sup_closed_form(&self, _g: &GroupElement) -> Option<f64> {
        None
    }
}

/// `sigma(g, u) = log(|g u| / |u|)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormCocycle;

impl Cocycle for NormCocycle {
    fn label(&self) -> &str {
        "log-norm"
    }

    fn evaluate(&self, g: &GroupElement, u: &ProjectivePoint) -> f64 {
        g.sigma(u)
    }

    fn step(&self, g: &GroupElement, u: &ProjectivePoint) -> (f64, ProjectivePoint) {
        g.step(u)
    }

    fn sup_closed_form(&self, g: &GroupElement) -> Option<f64> {
        Some(g.log_big_n())
    }
}

/// `sigma(g, u) = log|det g| / d`, constant in `u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DeterminantCocycle;

fn log_abs_det(g: &GroupElement) -> f64 {
    match g {
        GroupElement::Dense { matrix, .. } => matrix.singular_values().iter().map(|s| s.ln()).sum(),
        GroupElement::Polar(f) => f.log_singular().iter().sum(),
    }
}

impl Cocycle for DeterminantCocycle {
    fn label(&self) -> &str {
        "log-det"
    }

    fn evaluate(&self, g: &GroupElement, _u: &ProjectivePoint) -> f64 {
        log_abs_det(g) / g.dim() as f64
    }

    fn sup_closed_form(&self, g: &GroupElement) -> Option<f64> {
        Some((log_abs_det(g) / g.dim() as f64).abs())
    }
}

/// Cocycle given by a closure.
pub struct FnCocycle<F> {
    label: String,
    f: F,
}

impl<F> FnCocycle<F>
where
    F: Fn(&GroupElement, &ProjectivePoint) -> f64 + Send + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        FnCocycle { label: label.into(), f }
    }
}

impl<F> Cocycle for FnCocycle<F>
where
    F: Fn(&GroupElement, &ProjectivePoint) -> f64 + Send + Sync,
{
    fn label(&self) -> &str {
        &self.label
    }

    fn evaluate(&self, g: &GroupElement, u: &ProjectivePoint) -> f64 {
        (self.f)(g, u)
    }
}

/// `|sigma(g g', u) - sigma(g, g'.u) - sigma(g', u)|`.
pub fn cocycle_defect(c: &dyn Cocycle, g: &GroupElement, h: &GroupElement, u: &ProjectivePoint) -> Result<f64> {
    let gh = g.compose(h)?;
    Ok((c.evaluate(&gh, u) - c.evaluate(g, &h.act(u)) - c.evaluate(h, u)).abs())
}

fn probe_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> SquareMatrix {
    loop {
        let e: Vec<f64> = (0..dim * dim).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        if let Ok(m) = SquareMatrix::new(dim, e) {
            if m.log_big_n() < 8.0 {
                return m;
            }
        }
    }
}

/// A cocycle that passed the identity check on a random probe set.
#[derive(Clone)]
pub struct CocycleSpec {
    inner: Arc<dyn Cocycle>,
    max_probe_defect: f64,
}

impl fmt::Debug for CocycleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CocycleSpec")
            .field("label", &self.inner.label())
            .field("max_probe_defect", &self.max_probe_defect)
            .finish()
    }
}

impl CocycleSpec {
    /// Checks the cocycle identity on random dense triples in dimension `dim`.
    pub fn register(c: impl Cocycle + 'static, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = RngStream::auxiliary(seed, 0xC0C0);
        let mut worst: f64 = 0.0;
        for _ in 0..REGISTRATION_PROBES {
            let g: GroupElement = probe_matrix(dim, &mut rng).into();
            let h: GroupElement = probe_matrix(dim, &mut rng).into();
            let u: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
            let u = ProjectivePoint::new(&u)?;
            worst = worst.max(cocycle_defect(&c, &g, &h, &u)?);
        }
        if !(worst <= REGISTRATION_TOL) {
            return Err(invariant(format!("'{}' fails the cocycle identity (defect {worst:e})", c.label())));
        }
        Ok(CocycleSpec { inner: Arc::new(c), max_probe_defect: worst })
    }

    pub fn norm(dim: usize) -> Self {
        Self::register(NormCocycle, dim, 0).expect("norm cocycle satisfies the identity")
    }

    /// Looks up a built-in cocycle by label (`log-norm`, `log-det`).
    pub fn by_label(label: &str, dim: usize) -> Result<Self> {
        match label {
            "log-norm" => Self::register(NormCocycle, dim, 0),
            "log-det" => Self::register(DeterminantCocycle, dim, 0),
            other => Err(domain(format!("unknown cocycle '{other}' (expected log-norm or log-det)"))),
        }
    }

    pub fn label(&self) -> &str {
        self.inner.label()
    }

    pub fn max_probe_defect(&self) -> f64 {
        self.max_probe_defect
    }

    pub fn cocycle(&self) -> &dyn Cocycle {
        self.inner.as_ref()
    }
}

/// Streams the cocycle increments of one trajectory.
fn cocycle_walk<F>(spec: &MeasureSpec, c: &dyn Cocycle, x0: &ProjectivePoint, n: usize, rng: &mut RngStream, mut visit: F) -> Result<()>
where
    F: FnMut(usize, f64, &ProjectivePoint),
{
    if x0.dim() != spec.dim() {
        return Err(LabError::DimensionMismatch { expected: spec.dim(), got: x0.dim() });
    }
    let mut x = x0.clone();
    for k in 1..=n {
        let g = spec.sample(rng)?;
        let (inc, next) = c.step(&g, &x);
        if !inc.is_finite() {
            return Err(LabError::NumericFailure { routine: "cocycle walk", iterations: k });
        }
        visit(k, inc, &next);
        x = next;
    }
    Ok(())
}

fn cocycle_sum(spec: &MeasureSpec, c: &dyn Cocycle, x0: &ProjectivePoint, n: usize, seed: u64, stream: u64) -> Result<f64> {
    let mut rng = RngStream::new(seed, stream);
    let mut s = 0.0;
    cocycle_walk(spec, c, x0, n, &mut rng, |_, inc, _| s += inc)?;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda_hat: f64,
    pub std_error: f64,
    pub n: usize,
    pub reps: usize,
    pub x_grid_size: usize,
}

/// Mean of `S_n / n` over `reps` trajectories from every start in `x_grid`.
///
/// Trajectory `r` uses stream `r` from every start (common random numbers).
/// Returns the estimate and the per-trajectory means (averaged over starts).
pub fn estimate_lambda_detailed(
    spec: &MeasureSpec,
    cocycle: &CocycleSpec,
    n: usize,
    reps: usize,
    x_grid: &[ProjectivePoint],
    seed: u64,
) -> Result<(LyapunovEstimate, Vec<f64>)> {
    if n == 0 || reps == 0 || x_grid.is_empty() {
        return Err(domain("estimate_lambda needs n >= 1, reps >= 1 and a nonempty start grid"));
    }
    let c = cocycle.cocycle();
    let per_rep = map_indexed(reps as u64, |r| {
        let mut acc = 0.0;
        for x in x_grid {
            acc += cocycle_sum(spec, c, x, n, seed, r)? / n as f64;
        }
        Ok(acc / x_grid.len() as f64)
    })?;
    let est = LyapunovEstimate {
        lambda_hat: mean(&per_rep),
        std_error: batch_means_error(&per_rep, LAMBDA_BATCHES),
        n,
        reps,
        x_grid_size: x_grid.len(),
    };
    Ok((est, per_rep))
}

pub fn estimate_lambda(
    spec: &MeasureSpec,
    cocycle: &CocycleSpec,
    n: usize,
    reps: usize,
    x_grid: &[ProjectivePoint],
    seed: u64,
) -> Result<LyapunovEstimate> {
    estimate_lambda_detailed(spec, cocycle, n, reps, x_grid, seed).map(|(e, _)| e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub v_hat: f64,
    pub std_error: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub pooled: VarianceEstimate,
    pub per_start: Vec<(ProjectivePoint, VarianceEstimate)>,
    /// Every pair of starts agrees within three combined standard errors.
    pub x_independent: bool,
}

/// `V_hat = mean((S_n - n lambda)^2) / n` from at least two starts.
pub fn estimate_variance(
    spec: &MeasureSpec,
    cocycle: &CocycleSpec,
    lambda: f64,
    n: usize,
    reps: usize,
    starts: &[ProjectivePoint],
    seed: u64,
) -> Result<VarianceReport> {
    if n == 0 || reps < 2 {
        return Err(domain("estimate_variance needs n >= 1 and reps >= 2"));
    }
    if starts.len() < 2 {
        return Err(domain("estimate_variance needs at least two starting directions"));
    }
    let c = cocycle.cocycle();
    let rows: Vec<Vec<f64>> = map_indexed(reps as u64, |r| {
        starts
            .iter()
            .map(|x| cocycle_sum(spec, c, x, n, seed, r).map(|s| (s - n as f64 * lambda).powi(2) / n as f64))
            .collect()
    })?;
    let per_start: Vec<(ProjectivePoint, VarianceEstimate)> = starts
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            (x.clone(), VarianceEstimate { v_hat: mean(&col), std_error: std_error(&col), n })
        })
        .collect();
    let pooled_rows: Vec<f64> = rows.iter().map(|r| mean(r)).collect();
    let pooled = VarianceEstimate { v_hat: mean(&pooled_rows), std_error: std_error(&pooled_rows), n };
    let mut x_independent = true;
    for (i, (_, a)) in per_start.iter().enumerate() {
        for (_, b) in &per_start[i + 1..] {
            let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            if (a.v_hat - b.v_hat).abs() > 3.0 * joint {
                x_independent = false;
            }
        }
    }
    Ok(VarianceReport { pooled, per_start, x_independent })
}

/// Equally weighted visited directions after a burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    pub points: Vec<ProjectivePoint>,
}

impl OccupationMeasure {
    pub fn integrate(&self, h: impl Fn(&ProjectivePoint) -> f64) -> f64 {
        self.points.iter().map(h).sum::<f64>() / self.points.len() as f64
    }

    /// Angles in `[0, pi)` for planar chains.
    pub fn angles(&self) -> Option<Vec<f64>> {
        self.points.iter().map(|p| p.angle()).collect()
    }
}

/// Runs one chain from `x0`, discards `burn_in` steps and records the next `n`.
pub fn occupation_measure(spec: &MeasureSpec, x0: &ProjectivePoint, burn_in: usize, n: usize, seed: u64) -> Result<OccupationMeasure> {
    if n == 0 {
        return Err(domain("occupation measure needs n >= 1"));
    }
    let mut rng = RngStream::new(seed, 0);
    let mut points = Vec::with_capacity(n);
    let mut x = x0.clone();
    crate::matrix_walk::walk_each(spec, x0, burn_in + n, &mut rng, |k, _, dir, _| {
        if k > burn_in {
            points.push(dir.clone());
        }
        x = dir.clone();
    })?;
    Ok(OccupationMeasure { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceResidual {
    /// `nu_hat(h)`.
    pub lhs: f64,
    /// `(mu x nu_hat)(h o act)`, with fresh draws of `g`.
    pub rhs: f64,
    pub residual: f64,
    /// Batch-means standard error of the residual.
    pub std_error: f64,
}

/// Compares `nu_hat(h)` with `(mu x nu_hat)(h(g . u))` using one fresh `g` per point.
pub fn invariance_residual(
    spec: &MeasureSpec,
    occupation: &OccupationMeasure,
    h: impl Fn(&ProjectivePoint) -> f64,
    seed: u64,
) -> Result<InvarianceResidual> {
    let mut rng = RngStream::new(seed, AUX_DOMAIN | 0x1A);
    let mut diffs = Vec::with_capacity(occupation.points.len());
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for u in &occupation.points {
        let g = spec.sample(&mut rng)?;
        let (a, b) = (h(u), h(&g.act(u)));
        lhs += a;
        rhs += b;
        diffs.push(a - b);
    }
    let m = occupation.points.len() as f64;
    Ok(InvarianceResidual {
        lhs: lhs / m,
        rhs: rhs / m,
        residual: (lhs - rhs) / m,
        std_error: batch_means_error(&diffs, OCCUPATION_BATCHES),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendVerdict {
    SummableLooking,
    Inconclusive,
    Diverging,
}

impl fmt::Display for TrendVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrendVerdict::SummableLooking => "summable-looking",
            TrendVerdict::Inconclusive => "inconclusive",
            TrendVerdict::Diverging => "diverging",
        })
    }
}

/// Terms `a_n = sup_u |E sigma(Y_{n+1}, A_n . u) - lambda|`, n = 0..=n_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordinReport {
    pub a_n: Vec<f64>,
    /// Three standard errors of the maximizing start's mean, per term.
    pub noise: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Log-log slope over the resolved points of the upper half, if fitted.
    pub decay_exponent: Option<f64>,
    pub trend_verdict: TrendVerdict,
}

/// Decay exponent below which terms are judged summable.
pub const GORDIN_SUMMABLE_SLOPE: f64 = -1.1;

pub fn gordin_check(
    spec: &MeasureSpec,
    cocycle: &CocycleSpec,
    lambda: f64,
    n_max: usize,
    reps: usize,
    x_grid: &[ProjectivePoint],
    seed: u64,
) -> Result<GordinReport> {
    if x_grid.is_empty() || reps < 2 {
        return Err(domain("gordin_check needs a nonempty start grid and reps >= 2"));
    }
    let c = cocycle.cocycle();
    let len = n_max + 1;
    let mut a_n = vec![0.0; len];
    let mut noise = vec![0.0; len];
    for x in x_grid {
        let paths: Vec<Vec<f64>> = map_indexed(reps as u64, |r| {
            let mut rng = RngStream::new(seed, r);
            let mut incs = Vec::with_capacity(len);
            cocycle_walk(spec, c, x, len, &mut rng, |_, inc, _| incs.push(inc))?;
            Ok(incs)
        })?;
        for k in 0..len {
            let col: Vec<f64> = paths.iter().map(|p| p[k]).collect();
            let term = (mean(&col) - lambda).abs();
            if term > a_n[k] || (term == a_n[k] && noise[k] == 0.0) {
                a_n[k] = term;
                noise[k] = 3.0 * std_error(&col);
            }
        }
    }
    let partial_sums: Vec<f64> = a_n
        .iter()
        .scan(0.0, |s, a| {
            *s += a;
            Some(*s)
        })
        .collect();

    // Terms within Monte Carlo noise (or roundoff) are not resolved.
    let floor = 1e-12 * (1.0 + lambda.abs());
    let resolved_at = |k: usize| a_n[k] > noise[k] + floor;
    let lo = (n_max / 2).max(1);
    let resolved: Vec<usize> = (lo..=n_max).filter(|&k| resolved_at(k)).collect();
    let (decay_exponent, trend_verdict) = if n_max == 0 {
        let v = if !resolved_at(0) { TrendVerdict::SummableLooking } else { TrendVerdict::Inconclusive };
        (None, v)
    } else if resolved.is_empty() {
        // Everything past the midpoint is below Monte Carlo resolution.
        (None, TrendVerdict::SummableLooking)
    } else if resolved.len() < 3 {
        (None, TrendVerdict::Inconclusive)
    } else {
        let xs: Vec<f64> = resolved.iter().map(|&k| (k as f64).ln()).collect();
        let ys: Vec<f64> = resolved.iter().map(|&k| a_n[k].ln()).collect();
        match least_squares(&xs, &ys) {
            Some(fit) if fit.slope < GORDIN_SUMMABLE_SLOPE => (Some(fit.slope), TrendVerdict::SummableLooking),
            Some(fit) if fit.slope >= -1.0 => (Some(fit.slope), TrendVerdict::Diverging),
            Some(fit) => (Some(fit.slope), TrendVerdict::Inconclusive),
            None => (None, TrendVerdict::Inconclusive),
        }
    };
    Ok(GordinReport { a_n, noise, partial_sums, decay_exponent, trend_verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaStar {
    /// `max |sigma(m, u)|` over the direction grid.
    pub grid_value: f64,
    pub grid_size: usize,
    /// Closed form (for the norm cocycle, `log N(m)`).
    pub closed_form: Option<f64>,
}

/// `sigma*(g) = sup_u |sigma(g, u)|` on a quasi-uniform direction grid.
pub fn sigma_star(cocycle: &CocycleSpec, m: &GroupElement, grid_size: usize) -> Result<SigmaStar> {
    if grid_size < 2 {
        return Err(domain("sigma_star needs grid_size >= 2"));
    }
    let c = cocycle.cocycle();
    let grid_value = direction_grid(m.dim(), grid_size)
        .iter()
        .map(|u| c.evaluate(m, u).abs())
        .fold(0.0, f64::max);
    let closed_form = c.sup_closed_form(m);
    if let Some(cf) = closed_form {
        if grid_value > cf + 1e-8 {
            return Err(invariant(format!("grid sup {grid_value} exceeds closed form {cf}")));
        }
    }
    Ok(SigmaStar { grid_value, grid_size, closed_form })
}

/// Heuristic sanity report on strong irreducibility and proximality. Never blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibilityHeuristic {
    /// Largest occupation mass in one of 256 angular bins (d = 2 only).
    pub max_bin_mass: Option<f64>,
    /// `lambda_1 - lambda_2 = 2 lambda - E log|det|` (d = 2 only).
    pub gap_estimate: Option<f64>,
    /// Spread of `nu_hat(cos 2 theta)` across starts (d = 2) or of `lambda_hat`
    /// across starts (d >= 3).
    pub multi_start_spread: f64,
    pub warnings: Vec<String>,
}

pub fn irreducibility_heuristic(spec: &MeasureSpec, seed: u64) -> Result<IrreducibilityHeuristic> {
    let d = spec.dim();
    let starts = direction_grid(d, 4);
    let mut warnings = Vec::new();
    let steps = 20_000;
    let occs: Vec<OccupationMeasure> = starts
        .iter()
        .enumerate()
        .map(|(i, x)| occupation_measure(spec, x, 1_000, steps, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let (max_bin_mass, gap_estimate, spread);
    if d == 2 {
        let mut bins = vec![0usize; 256];
        let mut total = 0usize;
        for occ in &occs {
            for a in occ.angles().expect("planar") {
                bins[((a / PI * 256.0) as usize).min(255)] += 1;
                total += 1;
            }
        }
        let mass = *bins.iter().max().unwrap() as f64 / total as f64;
        if mass > 0.25 {
            warnings.push(format!("occupation puts mass {mass:.3} in a single 1/256 arc: invariant measure looks atomic"));
        }
        max_bin_mass = Some(mass);
        let probes: Vec<f64> = occs
            .iter()
            .map(|o| o.integrate(|p| (2.0 * p.angle().expect("planar")).cos()))
            .collect();
        spread = probes.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - probes.iter().cloned().fold(f64::INFINITY, f64::min);
        let cs = CocycleSpec::norm(2);
        let lam = estimate_lambda(spec, &cs, 200, 200, &starts, seed)?;
        let mut rng = RngStream::auxiliary(seed, 0xDE7);
        let det: f64 = (0..20_000)
            .map(|_| spec.sample(&mut rng).map(|g| log_abs_det(&g)))
            .sum::<Result<f64>>()?
            / 20_000.0;
        let gap = 2.0 * lam.lambda_hat - det;
        if gap < 1e-3 {
            warnings.push(format!("estimated exponent gap {gap:.4} is not clearly positive: mu may not be proximal"));
        }
        gap_estimate = Some(gap);
    } else {
        max_bin_mass = None;
        gap_estimate = None;
        let cs = CocycleSpec::norm(d);
        let lams: Vec<f64> = starts
            .iter()
            .map(|x| estimate_lambda(spec, &cs, 200, 100, std::slice::from_ref(x), seed).map(|e| e.lambda_hat))
            .collect::<Result<_>>()?;
        spread = lams.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - lams.iter().cloned().fold(f64::INFINITY, f64::min);
    }
    if spread > 0.1 {
        warnings.push(format!("multi-start disagreement {spread:.3}: invariant measure may not be unique"));
    }
    Ok(IrreducibilityHeuristic { max_bin_mass, gap_estimate, multi_start_spread: spread, warnings })
}
