//! Empirical deviation probabilities of `log ||A_n x|| - n lambda` and their
//! normalisations: rate regimes, complete-convergence series, bounded LIL and
//! moderate deviations.

mod kernel;
mod mdp;
mod rates;
mod series;
mod tails;

pub use kernel::scalar_maxima;
pub use mdp::{
    arcones_check, c_of_n, mdp_compare, mdp_rate, mdp_target, subexp_check, ArconesReport, ArconesRow, BnSpec,
    ConditionVerdict, MdpComparison, MdpPath, MdpRow, SubexpReport, DIVERGENCE_LEVEL,
};
pub use rates::{rate_extract, regime_fit, RateFit, RatePoint, RateSequence, Regime, MIN_FIT_POINTS};
pub use series::{baum_katz_partial, dyadic_schedule, lil_curve, LilReport, SeriesReport, SeriesRow};
pub use tails::{tail_estimate, TailCurve, MIN_REPS};
