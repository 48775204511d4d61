use std::hint::black_box;

use cnhaven_bench::{sim_config, wide_sim_config};
use cnhaven_core::sim::{simulate, theoretical_bounds};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn simulate_depths(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_256_hashes");
    g.sample_size(10);
    g.throughput(Throughput::Elements(256));
    for depth in [1, 16, 128] {
        let cfg = sim_config(depth);
        g.bench_with_input(BenchmarkId::new("one_port", depth), &cfg, |b, cfg| {
            b.iter(|| simulate(black_box(cfg), 256).unwrap())
        });
        let cfg = wide_sim_config(depth);
        g.bench_with_input(BenchmarkId::new("four_ports", depth), &cfg, |b, cfg| {
            b.iter(|| simulate(black_box(cfg), 256).unwrap())
        });
    }
    g.finish();
}

fn bounds(c: &mut Criterion) {
    let cfg = sim_config(64);
    c.bench_function("theoretical_bounds", |b| {
        b.iter(|| theoretical_bounds(black_box(&cfg)).unwrap())
    });
}

criterion_group!(benches, simulate_depths, bounds);
criterion_main!(benches);
