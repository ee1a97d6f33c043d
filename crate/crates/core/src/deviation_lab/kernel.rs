use crate::error::{domain, Result};
use crate::matrix_walk::{direction_grid, walk_each, MeasureSpec, ProjectivePoint, RngStream, ScalarLaw};
use crate::parallel::map_indexed;

/// Validated, strictly increasing checkpoint horizons.
pub(crate) fn check_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.is_empty() {
        return Err(domain("horizon schedule is empty"));
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("horizon schedule must be positive and strictly increasing"));
    }
    Ok(())
}

/// `max_{k<=n_c} |S_k - k lambda|` at every checkpoint `n_c`, one row per replication.
///
/// Replication `r` uses stream `r` of `seed`, so the same randomness drives
/// every start direction (common random numbers across the sup over `x`).
pub(crate) fn walk_maxima(
    spec: &MeasureSpec,
    lambda: f64,
    x0: &ProjectivePoint,
    checkpoints: &[usize],
    reps: u64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_schedule(checkpoints)?;
    let horizon = *checkpoints.last().expect("non-empty");
    map_indexed(reps, |r| {
        let mut rng = RngStream::new(seed, r);
        let mut out = Vec::with_capacity(checkpoints.len());
        let (mut s, mut best, mut next) = (0.0f64, 0.0f64, 0usize);
        walk_each(spec, x0, horizon, &mut rng, |k, inc, _, _| {
            s += inc - lambda;
            best = best.max(s.abs());
            if k == checkpoints[next] {
                out.push(best);
                next += 1;
            }
        })?;
        Ok(out)
    })
}

/// Same statistic for the i.i.d. walk with steps drawn from `law`.
pub fn scalar_maxima(law: &ScalarLaw, lambda: f64, checkpoints: &[usize], reps: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_schedule(checkpoints)?;
    let horizon = *checkpoints.last().expect("non-empty");
    map_indexed(reps, |r| {
        let mut rng = RngStream::new(seed, r);
        let mut out = Vec::with_capacity(checkpoints.len());
        let (mut s, mut best, mut next) = (0.0f64, 0.0f64, 0usize);
        for k in 1..=horizon {
            s += law.sample(&mut rng) - lambda;
            best = best.max(s.abs());
            if k == checkpoints[next] {
                out.push(best);
                next += 1;
            }
        }
        Ok(out)
    })
}

/// Exceedance counts `#{r : maxima[r][c] > thresholds[c][j]}`.
pub(crate) fn exceedances(maxima: &[Vec<f64>], thresholds: &[Vec<f64>]) -> Vec<Vec<u64>> {
    let mut counts: Vec<Vec<u64>> = thresholds.iter().map(|t| vec![0; t.len()]).collect();
    for row in maxima {
        for (c, &m) in row.iter().enumerate() {
            for (j, &t) in thresholds[c].iter().enumerate() {
                if m > t {
                    counts[c][j] += 1;
                }
            }
        }
    }
    counts
}

/// Exceedance counts maximised over a deterministic grid of start directions,
/// with the index of the maximising direction.
pub(crate) fn sup_exceedances(
    spec: &MeasureSpec,
    lambda: f64,
    x_grid: usize,
    checkpoints: &[usize],
    thresholds: &[Vec<f64>],
    reps: u64,
    seed: u64,
) -> Result<Vec<Vec<(u64, usize)>>> {
    if x_grid == 0 {
        return Err(domain("start-direction grid must be non-empty"));
    }
    let mut best: Vec<Vec<(u64, usize)>> = thresholds.iter().map(|t| vec![(0, 0); t.len()]).collect();
    for (xi, x0) in direction_grid(spec.dim(), x_grid).iter().enumerate() {
        let counts = exceedances(&walk_maxima(spec, lambda, x0, checkpoints, reps, seed)?, thresholds);
        for (b, c) in best.iter_mut().zip(&counts) {
            for (slot, &k) in b.iter_mut().zip(c) {
                if k > slot.0 {
                    *slot = (k, xi);
                }
            }
        }
    }
    Ok(best)
}
