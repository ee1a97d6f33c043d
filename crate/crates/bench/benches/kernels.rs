use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gllab_core::deviation_lab::tail_estimate;
use gllab_core::matrix_walk::{operator_norm, run_walk};
use gllab_core::mg_tools::{maximal_lp_rhs, random_martingale_space};
use gllab_core::{MeasureFamily, MeasureSpec, ProjectivePoint, RngStream, SquareMatrix};

fn two_matrix() -> MeasureSpec {
    let a = SquareMatrix::new(2, vec![1.1, 0.15, 0.05, 0.95]).unwrap();
    let b = SquareMatrix::new(2, vec![0.95, -0.25, 0.3, 1.05]).unwrap();
    MeasureSpec::finite(vec![a, b], vec![0.5, 0.5]).unwrap()
}

fn walk(c: &mut Criterion) {
    let spec = two_matrix();
    let x0 = ProjectivePoint::basis(2, 0);
    c.bench_function("walk/finite_support_d2_n1000", |b| {
        let mut rng = RngStream::new(1, 0);
        b.iter(|| run_walk(&spec, &x0, black_box(1000), &mut rng).unwrap())
    });
    let gauss = MeasureSpec::new(4, MeasureFamily::GaussianEntries { std: 1.0 }).unwrap();
    let x4 = ProjectivePoint::basis(4, 0);
    c.bench_function("walk/gaussian_d4_n1000", |b| {
        let mut rng = RngStream::new(1, 0);
        b.iter(|| run_walk(&gauss, &x4, black_box(1000), &mut rng).unwrap())
    });
    c.bench_function("tails/d2_n200_reps2000", |b| {
        b.iter(|| tail_estimate(&spec, 0.03, 200, 1.0, &[0.05, 0.1], 2, black_box(2000), 3).unwrap())
    });
}

fn norms(c: &mut Criterion) {
    for d in [2usize, 5, 10] {
        let entries: Vec<f64> = (0..d * d).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0 + if i % (d + 1) == 0 { 4.0 } else { 0.0 }).collect();
        let m = SquareMatrix::new(d, entries).unwrap();
        c.bench_function(&format!("operator_norm/d{d}"), |b| b.iter(|| operator_norm(black_box(&m)).unwrap()));
    }
}

fn maximal(c: &mut Criterion) {
    let space = random_martingale_space(&[2; 10], 5).unwrap();
    c.bench_function("maximal_lp_rhs/binary_depth10", |b| b.iter(|| maximal_lp_rhs(black_box(&space), 1.5).unwrap()));
}

criterion_group!(benches, walk, norms, maximal);
criterion_main!(benches);
