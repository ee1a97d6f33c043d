use gllab_core::coboundary::{extract_martingale, solve_poisson};
use gllab_core::cocycle::{cocycle_defect, NormCocycle};
use gllab_core::deviation_lab::tail_estimate;
use gllab_core::matrix_walk::run_walk;
use gllab_core::mg_tools::{haeusler_bound, haeusler_exact_terms, random_martingale_space, weak_lp_norm};
use gllab_core::{GroupElement, MeasureSpec, ProjectivePoint, RngStream, SquareMatrix};
use proptest::prelude::*;

fn invertible_2x2() -> impl Strategy<Value = SquareMatrix> {
    prop::array::uniform4(-3.0f64..3.0)
        .prop_filter("well conditioned", |e| (e[0] * e[3] - e[1] * e[2]).abs() > 0.1)
        .prop_map(|e| SquareMatrix::new(2, e.to_vec()).unwrap())
}

fn mild() -> MeasureSpec {
    let a = SquareMatrix::new(2, vec![1.1, 0.15, 0.05, 0.95]).unwrap();
    let b = SquareMatrix::new(2, vec![0.95, -0.25, 0.3, 1.05]).unwrap();
    MeasureSpec::finite(vec![a, b], vec![0.5, 0.5]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_cocycle_identity(g in invertible_2x2(), h in invertible_2x2(), t in 0.0f64..std::f64::consts::PI) {
        let (g, h): (GroupElement, GroupElement) = (g.into(), h.into());
        let u = ProjectivePoint::from_angle(t);
        prop_assert!(cocycle_defect(&NormCocycle, &g, &h, &u).unwrap() <= 1e-10);
    }

    #[test]
    fn haeusler_bound_dominates_exact_probability(
        seed in 0u64..1000,
        gamma in 0.05f64..10.0,
        u in 0.05f64..10.0,
        v in 0.05f64..10.0,
    ) {
        let space = random_martingale_space(&[2, 3, 2, 2], seed).unwrap();
        let (lhs, p1, p2) = haeusler_exact_terms(&space, gamma, u, v);
        prop_assert!(lhs <= haeusler_bound(gamma, u, v, p1, p2).unwrap() + 1e-12);
    }

    #[test]
    fn weak_norm_is_positively_homogeneous(xs in prop::collection::vec(-50.0f64..50.0, 1..200), c in 0.1f64..10.0, p in 0.5f64..3.0) {
        let a = weak_lp_norm(&xs, p).unwrap().value;
        let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let b = weak_lp_norm(&scaled, p).unwrap().value;
        prop_assert!((b - c * a).abs() <= 1e-9 * (1.0 + c * a));
    }
}

#[test]
fn walk_solve_extract_reconstructs_centred_sums() {
    let spec = mild();
    let sol = solve_poisson(&spec, 0.0, 9, 1e-9).unwrap();
    let mut rng = RngStream::new(3, 0);
    let path = run_walk(&spec, &ProjectivePoint::from_angle(0.4), 300, &mut rng).unwrap();
    let ext = extract_martingale(&path, &sol, sol.lambda_used).unwrap();
    assert!(ext.reconstruction_error < 1e-9, "{}", ext.reconstruction_error);
    assert!(sol.residual(0) < 1e-6);
}

#[test]
fn tail_curve_is_monotone_and_thread_independent() {
    let spec = mild();
    let ys = [0.01, 0.02, 0.04, 0.08];
    let curve = tail_estimate(&spec, 0.03, 100, 1.0, &ys, 3, 2000, 9).unwrap();
    assert!(curve.is_monotone());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let again = pool.install(|| tail_estimate(&spec, 0.03, 100, 1.0, &ys, 3, 2000, 9).unwrap());
    assert_eq!(curve, again);
}
