use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use trimem::{
    concurrence, eof_one_vs_two, partial_trace, segment_loops, tripartite_negativity, CorrelationOptions, LoopRule, C64,
};
use trimem_bench::{mixed_state, network, short_trajectory};

fn master_equation(c: &mut Criterion) {
    let mut group = c.benchmark_group("rhs");
    for d in [2, 4, 8] {
        let (eq, rho) = network(d);
        let n = rho.dim();
        let mut out = vec![C64::from(0.0); n * n];
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| eq.rhs_into(black_box(1e-10), rho.matrix().as_slice(), &mut out))
        });
    }
    group.finish();
}

fn correlations(c: &mut Criterion) {
    let rho = mixed_state();
    let pair = partial_trace(&rho, &[0, 2]).unwrap();
    c.bench_function("concurrence", |b| b.iter(|| concurrence(black_box(&pair)).unwrap()));
    c.bench_function("tripartite_negativity", |b| b.iter(|| tripartite_negativity(black_box(&rho)).unwrap()));
    let opts = CorrelationOptions::default();
    let mut group = c.benchmark_group("convex_roof");
    group.sample_size(10);
    group.bench_function("eof_2_vs_13", |b| b.iter(|| eof_one_vs_two(black_box(&rho), 1, &opts).unwrap()));
    group.finish();
}

fn hysteresis(c: &mut Criterion) {
    let t = short_trajectory(30.0);
    c.bench_function("segment_loops", |b| {
        b.iter(|| segment_loops(&t.voltage[0], &t.current[0], &t.times, LoopRule::FullPeriod).unwrap())
    });
}

criterion_group!(benches, master_equation, correlations, hysteresis);
criterion_main!(benches);
