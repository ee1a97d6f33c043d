//! Explicit martingale inequalities and finite probability spaces to test them on.

mod bounds;
mod finite_space;
pub mod suites;
mod truncate;
mod weak;

pub use bounds::{
    c_p, dyadic_order, haeusler_bound, haeusler_exact_terms, haeusler_plain_term, haeusler_sharp_bound,
    haeusler_sharp_term, maximal_lp_lhs, maximal_lp_rhs, quadratic_variation, vbe_constant, vbe_weak_bound,
    HaoLiuParams,
};
pub use finite_space::{FiniteAdaptedSpace, LevelFn};
pub use suites::{
    haeusler_suite, log_grid, maximal_suite, random_martingale_space, EnumerationScope, HaeuslerSuiteReport,
    HeavySymmetricMartingale, MaximalSuiteReport, VbeRow,
};
pub use truncate::{lil_threshold, lil_truncate, BinnedTruncationOracle};
pub use weak::{weak_lp_norm, weak_lp_norm_trimmed, WeakLpEstimate};
