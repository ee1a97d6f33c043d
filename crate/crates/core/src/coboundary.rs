//! Martingale-coboundary decomposition of the norm cocycle on the circle.
//!
//! For a finitely supported `mu` on `GL_2(R)` the Poisson equation
//! `psi - P psi = sigma_bar - lambda` is solved on an angular grid of the
//! projective line by summing the Neumann series `sum_j P^j (sigma_bar - lambda)`,
//! with `P` the exact finite mixture and images interpolated by periodic cubics.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, LabError, Result};
use crate::matrix_walk::{MeasureSpec, ProjectivePoint, RngStream, WalkPath};
use crate::stats::std_error;

/// Trailing window used to detect geometric decay of the Neumann series.
pub const DECAY_WINDOW: usize = 20;
/// Per-term decay ratio at or above which the series is declared non-contracting.
pub const DECAY_RATIO: f64 = 0.999;
const MAX_TERMS: usize = 2_000_000;
const STATIONARY_TOL: f64 = 1e-15;

/// How `sigma_bar` is integrated for measures without finite support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { mc_samples: 100_000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaBar {
    pub value: f64,
    /// Zero for exact quadrature.
    pub std_error: f64,
    pub exact: bool,
}

/// `sigma_bar(u) = int sigma(g, u) mu(dg)`: exact for finite supports, Monte Carlo otherwise.
pub fn sigma_bar(spec: &MeasureSpec, u: &ProjectivePoint, quad: &Quadrature) -> Result<SigmaBar> {
    if u.dim() != spec.dim() {
        return Err(LabError::DimensionMismatch { expected: spec.dim(), got: u.dim() });
    }
    if let Some((support, weights)) = spec.finite_support() {
        let value = support.iter().zip(weights).map(|(g, w)| w * g.sigma(u)).sum();
        return Ok(SigmaBar { value, std_error: 0.0, exact: true });
    }
    if quad.mc_samples < 2 {
        return Err(domain("Monte Carlo quadrature needs at least two samples"));
    }
    let mut rng = RngStream::auxiliary(quad.seed, 0x5B);
    let vals: Vec<f64> = (0..quad.mc_samples)
        .map(|_| spec.sample(&mut rng).map(|g| g.sigma(u)))
        .collect::<Result<_>>()?;
    Ok(SigmaBar { value: crate::stats::mean(&vals), std_error: std_error(&vals), exact: false })
}

fn exact_sigma_bar(spec: &MeasureSpec, u: &ProjectivePoint) -> f64 {
    let (support, weights) = spec.finite_support().expect("finite support checked by caller");
    support.iter().zip(weights).map(|(g, w)| w * g.sigma(u)).sum()
}

/// Four-point cubic Lagrange stencil on the periodic grid `k pi / size`.
/// Weights sum to one; the outer two can be slightly negative.
#[inline]
fn stencil(angle: f64, size: usize) -> [(usize, f64); 4] {
    let t = angle / PI * size as f64;
    let base = t.floor();
    let f = t - base;
    let n = size as i64;
    let i = base as i64;
    let at = |o: i64| (i + o).rem_euclid(n) as usize;
    [
        (at(-1), -f * (f - 1.0) * (f - 2.0) / 6.0),
        (at(0), (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0),
        (at(1), -(f + 1.0) * f * (f - 2.0) / 2.0),
        (at(2), (f + 1.0) * f * (f - 1.0) / 6.0),
    ]
}

#[inline]
fn interpolate(values: &[f64], angle: f64) -> f64 {
    stencil(angle, values.len()).iter().map(|&(i, w)| w * values[i]).sum()
}

/// Interpolated transition operator of the projective chain on the grid.
struct GridOperator {
    /// Per grid point: `(index, weight)` pairs over all support atoms.
    rows: Vec<Vec<(usize, f64)>>,
}

impl GridOperator {
    fn new(spec: &MeasureSpec, size: usize) -> Self {
        let (support, weights) = spec.finite_support().expect("finite support");
        let rows = (0..size)
            .map(|k| {
                let x = ProjectivePoint::from_angle(PI * k as f64 / size as f64);
                support
                    .iter()
                    .zip(weights)
                    .flat_map(|(g, w)| stencil(g.act(&x).angle().expect("planar"), size).map(|(i, c)| (i, w * c)))
                    .collect()
            })
            .collect();
        GridOperator { rows }
    }

    fn apply(&self, h: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(i, c)| c * h[i]).sum();
        }
    }

    /// Stationary distribution of the grid chain by power iteration on the
    /// lazy chain `(I + P) / 2`, which has the same invariant law and no periodicity.
    fn stationary(&self) -> Result<Vec<f64>> {
        let n = self.rows.len();
        let mut pi = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        for iter in 1..=MAX_TERMS {
            next.iter_mut().zip(&pi).for_each(|(x, p)| *x = 0.5 * p);
            for (k, row) in self.rows.iter().enumerate() {
                for &(i, c) in row {
                    next[i] += 0.5 * pi[k] * c;
                }
            }
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
            let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut pi, &mut next);
            if change < STATIONARY_TOL {
                return Ok(pi);
            }
            if iter > 1000 && iter % 1000 == 0 && change > 0.5 {
                break;
            }
        }
        Err(LabError::NumericFailure { routine: "grid stationary distribution", iterations: MAX_TERMS })
    }
}

/// Bounded solution of the Poisson equation on the angular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonSolution {
    pub grid_power: u32,
    /// `psi(k pi / 2^m)`, k = 0..2^m.
    pub psi: Vec<f64>,
    /// `sigma_bar` at the grid angles.
    pub sigma_bar: Vec<f64>,
    /// Centring constant supplied by the caller.
    pub lambda_input: f64,
    /// `nu_h(sigma_bar)` for the stationary law `nu_h` of the grid chain; the
    /// series is summed with this centring so that it converges.
    pub lambda_used: f64,
    pub truncation_terms: usize,
    /// Sup-norm of the last included term.
    pub tail_bound: f64,
    pub tol: f64,
    #[serde(skip)]
    measure: Option<MeasureSpec>,
}

impl PoissonSolution {
    pub fn grid_size(&self) -> usize {
        self.psi.len()
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.psi.len() as f64;
        (0..self.psi.len()).map(move |k| PI * k as f64 / n)
    }

    /// `psi` at an arbitrary line, by cubic interpolation.
    pub fn psi_at(&self, x: &ProjectivePoint) -> f64 {
        interpolate(&self.psi, x.angle().expect("planar point"))
    }

    pub fn max_abs(&self) -> f64 {
        self.psi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact `sigma_bar(x)` for the measure the solution was computed for.
    pub fn sigma_bar_at(&self, x: &ProjectivePoint) -> f64 {
        exact_sigma_bar(self.measure.as_ref().expect("solution carries its measure"), x)
    }

    /// `sup |psi - P psi - (sigma_bar - lambda_used)|` over the grid refined `2^refine` times.
    pub fn residual(&self, refine: u32) -> f64 {
        let spec = self.measure.as_ref().expect("solution carries its measure");
        let (support, weights) = spec.finite_support().expect("finite support");
        let n = self.psi.len() << refine;
        (0..n)
            .map(|k| {
                let x = ProjectivePoint::from_angle(PI * k as f64 / n as f64);
                let p_psi: f64 = support.iter().zip(weights).map(|(g, w)| w * self.psi_at(&g.act(&x))).sum();
                (self.psi_at(&x) - p_psi - (exact_sigma_bar(spec, &x) - self.lambda_used)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `angle,psi` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "angle,psi")?;
        for (a, p) in self.angles().zip(&self.psi) {
            writeln!(w, "{a:.17e},{p:.17e}")?;
        }
        Ok(())
    }
}

/// Solves `psi - P psi = sigma_bar - lambda` on `2^grid_power` angles for a
/// finitely supported planar measure.
pub fn solve_poisson(spec: &MeasureSpec, lambda: f64, grid_power: u32, tol: f64) -> Result<PoissonSolution> {
    if spec.dim() != 2 {
        return Err(LabError::Unsupported(format!(
            "the psi solver requires d = 2 (got d = {}); use split_one_step for the innovation/remainder splitting",
            spec.dim()
        )));
    }
    if spec.finite_support().is_none() {
        return Err(LabError::Unsupported("the psi solver requires a finitely supported measure".into()));
    }
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    if !(1..=24).contains(&grid_power) {
        return Err(domain("grid power must be in 1..=24"));
    }
    let size = 1usize << grid_power;
    let op = GridOperator::new(spec, size);
    let sb: Vec<f64> = (0..size)
        .map(|k| exact_sigma_bar(spec, &ProjectivePoint::from_angle(PI * k as f64 / size as f64)))
        .collect();
    let (lo, hi) = sb.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let lambda_used = if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
        // Constant sigma_bar: every invariant law gives the same centring.
        sb.iter().sum::<f64>() / size as f64
    } else {
        let nu = op.stationary()?;
        nu.iter().zip(&sb).map(|(p, s)| p * s).sum()
    };

    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut term: Vec<f64> = sb.iter().map(|s| s - lambda_used).collect();
    let mut next = vec![0.0; size];
    let mut psi = vec![0.0; size];
    let mut norms = vec![sup(&term)];
    let mut terms = 0;
    while norms[terms] >= tol {
        psi.iter_mut().zip(&term).for_each(|(p, t)| *p += t);
        terms += 1;
        if terms > MAX_TERMS {
            return Err(LabError::NumericFailure { routine: "solve_poisson", iterations: MAX_TERMS });
        }
        op.apply(&term, &mut next);
        std::mem::swap(&mut term, &mut next);
        norms.push(sup(&term));
        if terms >= DECAY_WINDOW {
            let (now, then) = (norms[terms], norms[terms - DECAY_WINDOW]);
            let ratio = if then > 0.0 { (now / then).powf(1.0 / DECAY_WINDOW as f64) } else { 0.0 };
            if ratio >= DECAY_RATIO && now >= tol {
                return Err(LabError::NoSpectralGap { ratio, terms });
            }
        }
    }
    Ok(PoissonSolution {
        grid_power,
        psi,
        sigma_bar: sb,
        lambda_input: lambda,
        lambda_used,
        truncation_terms: terms,
        tail_bound: norms[terms],
        tol,
        measure: Some(spec.clone()),
    })
}

/// Martingale-coboundary pieces of one trajectory.
///
/// Two splittings of `sum (X_i - lambda)` are recorded:
/// * coboundary: `X_k - lambda = D_k + psi(x_{k-1}) - psi(x_k)`;
/// * one-step: `X_k - lambda = (X_k - sigma_bar(x_{k-1})) + R_k` with
///   `R_k = sigma_bar(x_{k-1}) - lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleExtraction {
    pub d_seq: Vec<f64>,
    pub m_partial: Vec<f64>,
    pub innovation_seq: Vec<f64>,
    pub innovation_partial: Vec<f64>,
    pub r_seq: Vec<f64>,
    pub u_partial: Vec<f64>,
    /// `max_k |M_k + psi(x) - psi(x_k) - sum_{i<=k} (X_i - lambda)|`.
    pub reconstruction_error: f64,
}

fn running(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        })
        .collect()
}

/// Innovation/remainder splitting only; works in any dimension.
pub fn split_one_step(path: &WalkPath, spec: &MeasureSpec, lambda: f64, quad: &Quadrature) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut innovation = Vec::with_capacity(path.len());
    let mut remainder = Vec::with_capacity(path.len());
    for k in 1..=path.len() {
        let sb = sigma_bar(spec, path.direction_before(k), quad)?.value;
        innovation.push(path.increments[k - 1] - sb);
        remainder.push(sb - lambda);
    }
    Ok((innovation, remainder))
}

pub fn extract_martingale(path: &WalkPath, psi: &PoissonSolution, lambda: f64) -> Result<MartingaleExtraction> {
    if path.x0.dim() != 2 {
        return Err(LabError::DimensionMismatch { expected: 2, got: path.x0.dim() });
    }
    let n = path.len();
    let mut d_seq = Vec::with_capacity(n);
    let mut innovation_seq = Vec::with_capacity(n);
    let mut r_seq = Vec::with_capacity(n);
    let mut prev_psi = psi.psi_at(&path.x0);
    for k in 1..=n {
        let before = path.direction_before(k);
        let after = &path.directions[k - 1];
        let x = path.increments[k - 1];
        let next_psi = psi.psi_at(after);
        d_seq.push(x - lambda - prev_psi + next_psi);
        let sb = psi.sigma_bar_at(before);
        innovation_seq.push(x - sb);
        r_seq.push(sb - lambda);
        prev_psi = next_psi;
    }
    let m_partial = running(&d_seq);
    let psi0 = psi.psi_at(&path.x0);
    let centred: Vec<f64> = running(&path.increments.iter().map(|x| x - lambda).collect::<Vec<_>>());
    let reconstruction_error = m_partial
        .iter()
        .zip(&centred)
        .zip(&path.directions)
        .map(|((m, s), xk)| (m + psi0 - psi.psi_at(xk) - s).abs())
        .fold(0.0, f64::max);
    Ok(MartingaleExtraction {
        m_partial,
        innovation_partial: running(&innovation_seq),
        u_partial: running(&r_seq),
        d_seq,
        innovation_seq,
        r_seq,
        reconstruction_error,
    })
}

/// Largest value of `|D_k| - (log N(Y_k) + |lambda| + 2 max|psi|)` along the path.
/// Non-positive when the pathwise domination holds.
pub fn domination_excess(path: &WalkPath, ext: &MartingaleExtraction, psi: &PoissonSolution, lambda: f64) -> f64 {
    let slack = lambda.abs() + 2.0 * psi.max_abs();
    ext.d_seq
        .iter()
        .zip(&path.log_big_n)
        .map(|(d, ln)| d.abs() - (ln + slack))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Per-bin conditional means of `D_k` given the angle of `x_{k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedMeans {
    pub counts: Vec<usize>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
}

impl BinnedMeans {
    /// Largest `|mean| - k * std_error` over bins with at least `min_count` samples.
    pub fn worst_excess(&self, abs_tol: f64, k: f64, min_count: usize) -> f64 {
        self.counts
            .iter()
            .zip(self.means.iter().zip(&self.std_errors))
            .filter(|(c, _)| **c >= min_count)
            .map(|(_, (m, s))| m.abs() - abs_tol - k * s)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Simulates `trajectories` paths of `steps` steps from random starts and bins
/// `D_k` by the angle of `x_{k-1}` into `bins` arcs.
pub fn binned_conditional_means(
    spec: &MeasureSpec,
    psi: &PoissonSolution,
    trajectories: usize,
    steps: usize,
    bins: usize,
    seed: u64,
) -> Result<BinnedMeans> {
    if bins == 0 || trajectories == 0 || steps == 0 {
        return Err(domain("binning needs positive bins, trajectories and steps"));
    }
    let lambda = psi.lambda_used;
    let per_traj: Vec<Vec<(usize, f64)>> = crate::parallel::map_indexed(trajectories as u64, |r| {
        let mut rng = RngStream::new(seed, r);
        let x0 = ProjectivePoint::from_angle(PI * rng.random::<f64>());
        let mut out = Vec::with_capacity(steps);
        let mut prev = x0.clone();
        let mut prev_psi = psi.psi_at(&x0);
        crate::matrix_walk::walk_each(spec, &x0, steps, &mut rng, |_, inc, dir, _| {
            let next_psi = psi.psi_at(dir);
            let bin = ((prev.angle().expect("planar") / PI * bins as f64) as usize).min(bins - 1);
            out.push((bin, inc - lambda - prev_psi + next_psi));
            prev = dir.clone();
            prev_psi = next_psi;
        })?;
        Ok(out)
    })?;
    let mut sums = vec![0.0; bins];
    let mut sq = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for traj in &per_traj {
        for &(b, d) in traj {
            sums[b] += d;
            sq[b] += d * d;
            counts[b] += 1;
        }
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 }).collect();
    let std_errors = (0..bins)
        .map(|b| {
            let c = counts[b] as f64;
            if c < 2.0 {
                return f64::INFINITY;
            }
            let var = (sq[b] - c * means[b] * means[b]) / (c - 1.0);
            (var.max(0.0) / c).sqrt()
        })
        .collect();
    Ok(BinnedMeans { counts, means, std_errors })
}
