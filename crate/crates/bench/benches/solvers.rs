use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tear_bench::{generate_synthetic, SyntheticConfig};
use tear_core::scalar::{
    stab_region, trunc_abs_interval, trunc_abs_point, trunc_sq_interval, trunc_sq_point,
};
use tear_core::{register, AngleBox, FirstStageLoss, ScalarInterval, ScalarStage, SolverConfig};

fn stage(n: usize) -> (ScalarStage, Vec<f64>) {
    let cfg = SyntheticConfig {
        n,
        outlier_ratio: 0.95,
        seed: 1,
        ..Default::default()
    };
    let (pairs, _) = generate_synthetic(&cfg).unwrap();
    (
        ScalarStage::new(&pairs, FirstStageLoss::Tear).unwrap(),
        pairs.xi().to_vec(),
    )
}

fn small_box() -> AngleBox {
    AngleBox::new(
        ScalarInterval::new(1.0, 1.05).unwrap(),
        ScalarInterval::new(0.5, 0.55).unwrap(),
    )
    .unwrap()
}

fn scalar_solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("scalar");
    for n in [1_000, 10_000] {
        let (st, xi) = stage(n);
        let b = st.offsets(&small_box());
        let a = st.anchors(&nalgebra::Vector3::new(0.6, 0.0, 0.8));
        let windows: Vec<_> = b
            .iter()
            .map(|iv| ScalarInterval {
                lo: iv.lo - 0.05,
                hi: iv.hi + 0.05,
            })
            .collect();
        g.bench_with_input(BenchmarkId::new("offsets", n), &n, |bch, _| {
            bch.iter(|| st.offsets(black_box(&small_box())))
        });
        g.bench_with_input(BenchmarkId::new("abs_point", n), &n, |bch, _| {
            bch.iter(|| trunc_abs_point(black_box(&a), &xi))
        });
        g.bench_with_input(BenchmarkId::new("abs_interval", n), &n, |bch, _| {
            bch.iter(|| trunc_abs_interval(black_box(&b), &xi))
        });
        g.bench_with_input(BenchmarkId::new("sq_point", n), &n, |bch, _| {
            bch.iter(|| trunc_sq_point(black_box(&a), &xi))
        });
        g.bench_with_input(BenchmarkId::new("sq_interval", n), &n, |bch, _| {
            bch.iter(|| trunc_sq_interval(black_box(&b), &xi))
        });
        g.bench_with_input(BenchmarkId::new("stab", n), &n, |bch, _| {
            bch.iter(|| stab_region(black_box(&windows)))
        });
    }
    g.finish();
}

fn registration(c: &mut Criterion) {
    let mut g = c.benchmark_group("register");
    g.sample_size(10);
    let cfg = SyntheticConfig {
        n: 1000,
        outlier_ratio: 0.95,
        seed: 1,
        ..Default::default()
    };
    let (pairs, _) = generate_synthetic(&cfg).unwrap();
    g.bench_function("n1000_r0.95", |b| {
        b.iter(|| register(black_box(&pairs), &SolverConfig::default()))
    });
    g.finish();
}

criterion_group!(benches, scalar_solvers, registration);
criterion_main!(benches);
