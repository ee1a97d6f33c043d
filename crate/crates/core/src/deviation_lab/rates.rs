use serde::{Deserialize, Serialize};

use super::mdp::{log_rate_row, BnSpec};
use super::tails::TailCurve;
use crate::error::{domain, LabError, Result};
use crate::stats::least_squares;

/// Normalisation applied to tail probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum Regime {
    /// `(1/n) log p`, deviations at scale `n`, `y < 1`.
    LargeDevSmallY,
    /// `(1/n) log p`, deviations at scale `n`, `y >= 1`.
    LargeDevBigY,
    /// `(1/n^r) log p`, deviations at scale `n`, `r` in (0, 1).
    Subexp { r: f64 },
    /// `n^{alpha p - 1} p`, deviations at scale `n^alpha`.
    WeakMoment { p: f64 },
    /// `(n / b_n^2) log p`, deviations at scale `b_n`.
    Mdp { bn: BnSpec },
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::LargeDevSmallY => "large-dev-small-y",
            Regime::LargeDevBigY => "large-dev-big-y",
            Regime::Subexp { .. } => "subexp",
            Regime::WeakMoment { .. } => "weak-moment",
            Regime::Mdp { .. } => "mdp",
        }
    }
}

/// Transformed tail probability at one `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub y: f64,
    /// Absent when the cell is censored (`p_hat = 0`).
    pub value: Option<f64>,
    pub lo: f64,
    /// For censored log-regime cells, the rule-of-three upper bound.
    pub hi: f64,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSequence {
    pub regime: Regime,
    pub n: usize,
    pub points: Vec<RatePoint>,
}

fn require_alpha_one(curve: &TailCurve, regime: &Regime) -> Result<()> {
    if curve.alpha != 1.0 {
        return Err(domain(format!("{} regime needs deviations at scale n (alpha = 1), curve has alpha = {}", regime.label(), curve.alpha)));
    }
    Ok(())
}

/// Applies the regime's normalisation to every cell of the curve, with the
/// confidence interval transformed endpoint by endpoint.
pub fn rate_extract(curve: &TailCurve, regime: &Regime) -> Result<RateSequence> {
    let n = curve.n as f64;
    let log_factor = match regime {
        Regime::LargeDevSmallY | Regime::LargeDevBigY => {
            require_alpha_one(curve, regime)?;
            Some(1.0 / n)
        }
        Regime::Subexp { r } => {
            require_alpha_one(curve, regime)?;
            if !(*r > 0.0 && *r < 1.0) {
                return Err(domain(format!("subexponential regime needs r in (0, 1), got {r}")));
            }
            Some(n.powf(-r))
        }
        Regime::Mdp { bn } => {
            bn.validate()?;
            let b = bn.b(curve.n)?;
            let scale = n.powf(curve.alpha);
            if (b - scale).abs() > 1e-9 * scale {
                return Err(domain(format!("curve threshold scale n^alpha = {scale} does not match b_n = {b}")));
            }
            Some(n / (b * b))
        }
        Regime::WeakMoment { p } => {
            if !(*p > 1.0) {
                return Err(domain("weak-moment regime needs p > 1"));
            }
            None
        }
    };
    let points = curve
        .y_grid
        .iter()
        .zip(&curve.p_hat)
        .map(|(&y, &prop)| match (log_factor, regime) {
            (Some(f), _) => {
                let (value, lo, hi, censored) = log_rate_row(prop, f);
                RatePoint { y, value, lo, hi, censored }
            }
            (None, Regime::WeakMoment { p }) => {
                let f = n.powf(curve.alpha * p - 1.0);
                let censored = prop.successes == 0;
                RatePoint {
                    y,
                    value: if censored { None } else { Some(f * prop.estimate) },
                    lo: f * prop.lo,
                    hi: if censored { f * prop.rule_of_three() } else { f * prop.hi },
                    censored,
                }
            }
            _ => unreachable!("log factor is absent only for the weak-moment regime"),
        })
        .collect();
    Ok(RateSequence { regime: regime.clone(), n: curve.n, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub regime: String,
    pub exponent_hat: f64,
    pub constant_hat: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points_used: usize,
}

/// Minimum uncensored points in the fitting window.
pub const MIN_FIT_POINTS: usize = 4;

/// Least squares of `log |rate|` on `log y` over uncensored points with `y`
/// in `window`: `exponent_hat` is the slope and `constant_hat = exp(intercept)`.
/// For the log regimes `|rate| = -rate`, so `rate ~ -C y^e`.
pub fn regime_fit(seq: &RateSequence, window: (f64, f64)) -> Result<RateFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = seq
        .points
        .iter()
        .filter(|p| p.y >= window.0 && p.y <= window.1)
        .filter_map(|p| p.value.filter(|v| *v != 0.0 && v.is_finite()).map(|v| (p.y.ln(), v.abs().ln())))
        .unzip();
    if xs.len() < MIN_FIT_POINTS {
        return Err(LabError::InsufficientData(format!(
            "{} uncensored non-zero points in [{}, {}], need {MIN_FIT_POINTS}",
            xs.len(),
            window.0,
            window.1
        )));
    }
    let fit = least_squares(&xs, &ys).ok_or_else(|| LabError::InsufficientData("degenerate fit".into()))?;
    Ok(RateFit {
        regime: seq.regime.label().to_string(),
        exponent_hat: fit.slope,
        constant_hat: fit.intercept.exp(),
        r_squared: fit.r_squared.clamp(0.0, 1.0),
        window,
        points_used: xs.len(),
    })
}
