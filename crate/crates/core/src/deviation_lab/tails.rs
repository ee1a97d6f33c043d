use serde::{Deserialize, Serialize};

use super::kernel::sup_exceedances;
use crate::error::{domain, Result};
use crate::matrix_walk::MeasureSpec;
use crate::stats::Proportion;

/// Minimum replications for a tail estimate.
pub const MIN_REPS: u64 = 100;

/// Estimated `sup_x P(max_{k<=n} |log ||A_k x|| - k lambda| > n^alpha y)` over a `y` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub n: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub y_grid: Vec<f64>,
    /// Largest exceedance count over the start grid, per `y`.
    pub p_hat: Vec<Proportion>,
    /// Index in the start grid attaining the maximum, per `y`.
    pub argmax_x: Vec<usize>,
    pub x_grid_size: usize,
    pub reps: u64,
    pub seed: u64,
}

impl TailCurve {
    pub fn estimates(&self) -> Vec<f64> {
        self.p_hat.iter().map(|p| p.estimate).collect()
    }

    /// Exact check: counts never increase along the `y` grid.
    pub fn is_monotone(&self) -> bool {
        self.p_hat.windows(2).all(|w| w[1].successes <= w[0].successes)
    }
}

pub(crate) fn check_y_grid(y_grid: &[f64]) -> Result<()> {
    if y_grid.is_empty() {
        return Err(domain("y grid is empty"));
    }
    if y_grid.iter().any(|y| !(*y > 0.0) || !y.is_finite()) {
        return Err(domain("y grid values must be positive and finite"));
    }
    if y_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("y grid must be strictly increasing"));
    }
    Ok(())
}

/// One pass per trajectory stores its overall maximal deviation, which is
/// then compared with every threshold `n^alpha y`.
#[allow(clippy::too_many_arguments)]
pub fn tail_estimate(
    spec: &MeasureSpec,
    lambda: f64,
    n: usize,
    alpha: f64,
    y_grid: &[f64],
    x_grid: usize,
    reps: u64,
    seed: u64,
) -> Result<TailCurve> {
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(domain(format!("alpha must lie in (1/2, 1], got {alpha}")));
    }
    if reps < MIN_REPS {
        return Err(domain(format!("at least {MIN_REPS} replications are required, got {reps}")));
    }
    if n == 0 {
        return Err(domain("horizon must be positive"));
    }
    check_y_grid(y_grid)?;
    let scale = (n as f64).powf(alpha);
    let thresholds = vec![y_grid.iter().map(|y| scale * y).collect::<Vec<_>>()];
    let best = sup_exceedances(spec, lambda, x_grid, &[n], &thresholds, reps, seed)?;
    Ok(TailCurve {
        n,
        alpha,
        lambda,
        y_grid: y_grid.to_vec(),
        p_hat: best[0].iter().map(|&(c, _)| Proportion::wilson(c, reps)).collect(),
        argmax_x: best[0].iter().map(|&(_, x)| x).collect(),
        x_grid_size: x_grid,
        reps,
        seed,
    })
}
