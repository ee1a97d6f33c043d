//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute in order
//! with their full replication counts and a visible runtime per line.

use std::f64::consts::{FRAC_PI_3, LN_2};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gllab_core::coboundary::{binned_conditional_means, solve_poisson};
use gllab_core::cocycle::{cocycle_defect, estimate_lambda, estimate_variance, CocycleSpec, NormCocycle};
use gllab_core::deviation_lab::{baum_katz_partial, dyadic_schedule, mdp_compare, rate_extract, regime_fit, tail_estimate, BnSpec, Regime};
use gllab_core::matrix_walk::direction_grid;
use gllab_core::mg_tools::{
    haeusler_plain_term, haeusler_sharp_term, haeusler_suite, log_grid, maximal_suite, random_martingale_space, vbe_constant,
    HeavySymmetricMartingale,
};
use gllab_core::{MeasureFamily, MeasureSpec, ProjectivePoint, RngStream, ScalarLaw, SquareMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let c = NormCocycle;
    let mut worst: f64 = 0.0;
    for d in [2usize, 3] {
        let spec = MeasureSpec::new(d, MeasureFamily::GaussianEntries { std: 1.0 }).unwrap();
        let mut rng = RngStream::new(11, d as u64);
        for _ in 0..5_000 {
            let g = spec.sample(&mut rng).unwrap().into_owned();
            let h = spec.sample(&mut rng).unwrap().into_owned();
            let k = spec.sample(&mut rng).unwrap().into_owned();
            let u = k.act(&ProjectivePoint::basis(d, 0));
            worst = worst.max(cocycle_defect(&c, &g, &h, &u).unwrap());
        }
    }
    outcome(worst <= 1e-10, format!("10^4 triples, d in {{2,3}}: max defect {worst:.3e} (limit 1e-10)"))
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (d, c) in [(2usize, 2.0f64), (2, 0.5), (3, 3.0)] {
        let m = SquareMatrix::rotation(d, 0.7).scaled(c).unwrap();
        let spec = MeasureSpec::dirac(m);
        let cs = CocycleSpec::norm(d);
        let grid = direction_grid(d, 3);
        let lam = estimate_lambda(&spec, &cs, 200, 50, &grid, 1).unwrap();
        let var = estimate_variance(&spec, &cs, lam.lambda_hat, 200, 50, &grid, 2).unwrap();
        let err = (lam.lambda_hat - c.ln()).abs();
        ok &= err <= 1e-12 && var.pooled.v_hat.abs() <= 1e-20;
        notes.push(format!("dirac {c}R d={d}: |err| {err:.1e}, V {:.1e}", var.pooled.v_hat));
    }
    let law = ScalarLaw::Discrete { values: vec![LN_2, -LN_2], weights: vec![0.5, 0.5] };
    let spec = MeasureSpec::new(2, MeasureFamily::ScaledRotation { log_scale: law, uniform_rotation: true, angle: 0.0 }).unwrap();
    let cs = CocycleSpec::norm(2);
    let lam = estimate_lambda(&spec, &cs, 1000, 10_000, &direction_grid(2, 1), 3).unwrap();
    let var = estimate_variance(&spec, &cs, 0.0, 1000, 10_000, &direction_grid(2, 2), 4).unwrap();
    let v_err = (var.pooled.v_hat - LN_2 * LN_2).abs();
    ok &= lam.lambda_hat.abs() <= 3.0 * lam.std_error && v_err <= 3.0 * var.pooled.std_error;
    notes.push(format!(
        "+-log2: lambda {:.2e} (3se {:.2e}), V {:.5} vs {:.5} (3se {:.2e})",
        lam.lambda_hat,
        3.0 * lam.std_error,
        var.pooled.v_hat,
        LN_2 * LN_2,
        3.0 * var.pooled.std_error
    ));
    outcome(ok, notes.join("; "))
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut configs = 0u64;
    let mut violations = 0u64;
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        for p in [1.1, 1.5, 1.9] {
            let r = maximal_suite(n, p, 2_000, 17 + n as u64).unwrap();
            configs += r.configurations;
            violations += r.violations;
            worst = worst.max(r.worst_ratio);
            ok &= r.violations == 0 && r.worst_ratio <= 1.0 + 1e-12 && r.certified_all;
        }
    }
    outcome(
        ok,
        format!(
            "n <= 8, p in {{1.1,1.5,1.9}}: {configs} configurations checked (all tables for n <= 3), {violations} violations, \
             worst lhs/rhs {worst:.4}; S_n* <= n <= rhs certifies every adapted +-1 table"
        ),
    )
}

fn criterion_4() -> Outcome {
    let shapes: [&[usize]; 4] = [&[2; 10], &[3; 6], &[2, 3, 2, 3, 2, 3], &[4; 5]];
    let spaces: Vec<_> = shapes.iter().enumerate().map(|(i, b)| random_martingale_space(b, 40 + i as u64).unwrap()).collect();
    let g = log_grid(0.05, 20.0, 10);
    let r = haeusler_suite(&spaces, &g, &g, &g).unwrap();
    let grid = log_grid(1e-3, 1e3, 20);
    let mut sharp_bad = 0;
    for &gamma in &grid {
        for &u in &grid {
            for &v in &grid {
                let plain = haeusler_plain_term(gamma, u, v).unwrap();
                let sharp = haeusler_sharp_term(gamma, u, v).unwrap();
                if sharp > plain * (1.0 + 1e-12) {
                    sharp_bad += 1;
                }
            }
        }
    }
    outcome(
        r.violations == 0 && sharp_bad == 0,
        format!(
            "{} spaces (n <= 10) x 10^3 grid: {} checks, {} violations, min slack {:.3e}; sharp term above plain at {sharp_bad} of 20^3",
            r.spaces, r.checks, r.violations, r.min_slack
        ),
    )
}

fn criterion_5() -> Outcome {
    let k = vbe_constant(1.5).unwrap();
    // Small increments keep the bound below 1, where it says something.
    let mg = HeavySymmetricMartingale::new(1.5, 64, 0.01).unwrap();
    let rows = mg.check(&[1.0, 2.0, 4.0, 8.0], 100_000, 5).unwrap();
    let ok = k == 28.0 && rows.iter().all(|r| r.p_hat <= r.bound + 3.0 * r.std_error);
    let cells: Vec<String> = rows.iter().map(|r| format!("y={} p {:.5} (se {:.1e}) <= {:.4}", r.y, r.p_hat, r.std_error, r.bound)).collect();
    outcome(ok, format!("K = {k}; {}", cells.join(", ")))
}

/// Near-conformal two-matrix measure with a smooth invariant density.
fn mild_measure() -> MeasureSpec {
    let a = SquareMatrix::new(2, vec![1.1, 0.15, 0.05, 0.95]).unwrap();
    let b = SquareMatrix::new(2, vec![0.95, -0.25, 0.3, 1.05]).unwrap();
    MeasureSpec::finite(vec![a, b], vec![0.5, 0.5]).unwrap()
}

fn criterion_6() -> Outcome {
    let spec = mild_measure();
    let lam = estimate_lambda(&spec, &CocycleSpec::norm(2), 2000, 500, &direction_grid(2, 2), 6).unwrap();
    let sol = match solve_poisson(&spec, lam.lambda_hat, 11, 1e-6) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("solver failed: {e}")),
    };
    let residual = sol.residual(2);
    let binned = binned_conditional_means(&spec, &sol, 100_000, 20, 64, 7).unwrap();
    let excess = binned.worst_excess(5e-3, 3.0, 1);
    outcome(
        residual <= 1e-5 && excess <= 0.0,
        format!("grid 2^11, tol 1e-6: residual {residual:.3e} (limit 1e-5); worst |mean| - (5e-3 + 3se) over 64 bins {excess:.3e}"),
    )
}

/// `e^c diag(s, 1/s)` and `e^{-c} K diag(s, 1/s) K^{-1}` with `K` the rotation
/// by `theta`. The opposite scalars add about `c^2` to the variance without
/// changing the projective action.
fn two_matrix_family(theta: f64, s: f64, c: f64) -> MeasureSpec {
    let d = SquareMatrix::diag(&[s, 1.0 / s]);
    let a = d.scaled(c.exp()).unwrap();
    let r = SquareMatrix::rotation(2, theta);
    let b = r.mul(&d).unwrap().mul(&SquareMatrix::rotation(2, -theta)).unwrap().scaled((-c).exp()).unwrap();
    MeasureSpec::finite(vec![a, b], vec![0.5, 0.5]).unwrap()
}

fn criterion_7() -> Outcome {
    let spec = two_matrix_family(FRAC_PI_3, 2.0, 1.5);
    let lam = estimate_lambda(&spec, &CocycleSpec::norm(2), 2000, 2000, &direction_grid(2, 4), 8).unwrap();
    let ys: Vec<f64> = (0..9).map(|i| 0.1 + 0.05 * i as f64).collect();
    let curve = tail_estimate(&spec, lam.lambda_hat, 200, 1.0, &ys, 4, 1_000_000, 9).unwrap();
    let seq = rate_extract(&curve, &Regime::LargeDevSmallY).unwrap();
    match regime_fit(&seq, (0.1, 0.5)) {
        Ok(f) => outcome(
            (1.6..=2.4).contains(&f.exponent_hat) && f.r_squared >= 0.9,
            format!(
                "n=200, 10^6 reps, y in [0.1,0.5]: exponent {:.3} (range [1.6,2.4]), r^2 {:.4}, {} points",
                f.exponent_hat, f.r_squared, f.points_used
            ),
        ),
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len().is_multiple_of(2) {
        0.5 * (s[m - 1] + s[m])
    } else {
        s[m]
    }
}

fn criterion_8() -> Outcome {
    let spec = MeasureSpec::new(2, MeasureFamily::HeavyTailedConjugatedDiagonal { tail_index: 1.5, randomize_rotations: true }).unwrap();
    let lam = estimate_lambda(&spec, &CocycleSpec::norm(2), 4096, 1000, &direction_grid(2, 4), 10).unwrap();
    let schedule: Vec<usize> = dyadic_schedule(12).into_iter().filter(|&n| n >= 32).collect();
    let r = baum_katz_partial(&spec, lam.lambda_hat, 1.0, 1.5, 1.0, &schedule, 2, 20_000, 11).unwrap();
    let scaled: Vec<f64> = r.rows.iter().map(|row| (row.n as f64).sqrt() * row.p_hat.estimate).collect();
    let (max, med) = (scaled.iter().cloned().fold(0.0, f64::max), median(&scaled));
    let cells: Vec<String> = r.rows.iter().zip(&scaled).map(|(row, s)| format!("{}:{s:.3}", row.n)).collect();
    outcome(
        med > 0.0 && max <= 10.0 * med,
        format!("n^0.5 p_hat over 2^5..2^12 [{}]: max {max:.3} vs 10 x median {:.3}", cells.join(" "), 10.0 * med),
    )
}

fn criterion_9() -> Outcome {
    let law = ScalarLaw::Discrete { values: vec![1.0, -1.0], weights: vec![0.5, 0.5] };
    let spec = MeasureSpec::new(2, MeasureFamily::ScaledRotation { log_scale: law, uniform_rotation: false, angle: 0.0 }).unwrap();
    let r = mdp_compare(&spec, 0.0, 1.0, &BnSpec::Power { alpha: 0.6 }, 1.0, &[4096, 8192, 16384], 1, 20_000, 12).unwrap();
    let ok = r.rows.iter().all(|row| row.value.is_some_and(|v| (-1.0..=-0.25).contains(&v)));
    let cells: Vec<String> = r
        .rows
        .iter()
        .map(|row| format!("n={}: {} [{:.3}, {:.3}]", row.n, row.value.map_or("censored".into(), |v| format!("{v:.3}")), row.lo, row.hi))
        .collect();
    outcome(ok, format!("target {:.2}; {}", r.target, cells.join("; ")))
}

const DETERMINISM_MEASURE: &str = r#"
[measure]
dim = 2
family = "finite_support"
matrices = [[[1.1, 0.15], [0.05, 0.95]], [[0.95, -0.25], [0.3, 1.05]]]
weights = [0.5, 0.5]
"#;

const DETERMINISM_BLOCKS: &[(&str, &str)] = &[
    ("lyapunov", "[lyapunov]\nn = 200\nreps = 400\nx_grid = 3\n"),
    (
        "tails",
        "[tails]\nn = 100\nalpha = 1.0\ny_grid = [0.02, 0.05, 0.1]\nreps = 2000\nx_grid = 4\n\
         regime = { regime = \"large-dev-small-y\" }\nlambda = { n = 500, reps = 200 }\n\
         [tails.baum_katz]\nalpha = 1.0\np = 1.5\ny = 0.05\nschedule = [8, 16, 32]\nreps = 500\n\
         [tails.lil]\nv = 0.05\ny = 1.0\nschedule = [8, 16, 32]\nreps = 500\n",
    ),
    (
        "bounds",
        "[bounds.haeusler]\ngamma = [0.5, 2.0]\nu = [1.0]\nv = [0.5, 4.0]\n\
         [bounds.haeusler_suite]\nspaces = [[2, 2, 2], [3, 2]]\ngrid = 3\n\
         [bounds.maximal]\nmax_depth = 4\np = [1.5]\nrandom = 50\n\
         [bounds.vbe]\np = 1.5\nn = 16\nscale = 1.0\nreps = 2000\ny = [1.0, 4.0]\n",
    ),
    (
        "mdp",
        "[mdp]\nbn = { form = \"power\", alpha = 0.6 }\nc_of_n_max = 10\nlinear_slopes = [1.0]\nv = [0.5]\n\
         arcones_schedule = [10, 100]\n\
         [mdp.compare]\ny = 0.2\nv = 0.05\nschedule = [64, 128]\nreps = 1000\nlambda = { n = 500, reps = 200 }\n",
    ),
    ("decompose", "[decompose]\ngrid_power = 7\ntol = 1e-6\ntrajectories = 300\nsteps = 10\nbins = 8\npath_len = 50\n"),
    ("check-measure", "[check_measure]\ngordin_n_max = 6\ngordin_reps = 200\n"),
];

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for (command, block) in DETERMINISM_BLOCKS {
        let cfg = tmp.path().join(format!("{command}.toml"));
        fs::write(&cfg, format!("seed = 2024\n{DETERMINISM_MEASURE}{block}")).unwrap();
        let mut reference: Option<Vec<(String, Vec<u8>)>> = None;
        for threads in [1, 4, 16] {
            let out = tmp.path().join(format!("{command}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_gllab"))
                .arg(command)
                .arg("--config")
                .arg(&cfg)
                .arg("--threads")
                .arg(threads.to_string())
                .arg("--out")
                .arg(&out)
                .env_remove("GLLAB_SEED")
                .output()
                .unwrap();
            if !status.status.success() {
                return outcome(false, format!("{command} --threads {threads} failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            let files = csv_files(&out);
            if files.is_empty() {
                return outcome(false, format!("{command} wrote no CSV"));
            }
            match &reference {
                None => reference = Some(files),
                Some(r) if *r == files => compared += files.len(),
                Some(_) => return outcome(false, format!("{command}: CSV bytes differ between 1 and {threads} threads")),
            }
        }
    }
    outcome(true, format!("6 commands x threads {{1,4,16}}: {compared} CSV comparisons byte-identical"))
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, fn() -> Outcome, u64);
    let criteria: [Criterion; 10] = [
        (1, "cocycle identity", criterion_1, 5),
        (2, "exact Lyapunov cases", criterion_2, 60),
        (3, "maximal L^p inequality", criterion_3, 120),
        (4, "Haeusler validity", criterion_4, 120),
        (5, "weak von Bahr-Esseen bound", criterion_5, 120),
        (6, "martingale extraction", criterion_6, 300),
        (7, "y^2 rate regime", criterion_7, 600),
        (8, "weak-moment scaling", criterion_8, 600),
        (9, "MDP contraction target", criterion_9, 600),
        (10, "thread-count determinism", criterion_10, 300),
    ];
    let mut failed = 0;
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.1}s of {budget}s{}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
