use std::hint::black_box;

use cnhaven_bench::sample_job;
use cnhaven_core::analysis::trace_stats;
use cnhaven_core::hash::{explode, implode, shuffle};
use cnhaven_core::{
    aes_expand_keys, aes_round, keccak_absorb, keccak_f1600, Block128, Hasher, KeccakState,
    Scratchpad,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn primitives(c: &mut Criterion) {
    let st = KeccakState::from_lanes(std::array::from_fn(|i| i as u64 * 0x9E37_79B9));
    c.bench_function("keccak_f1600", |b| b.iter(|| keccak_f1600(black_box(&st))));
    let (blk, key) = (Block128([7; 16]), Block128([9; 16]));
    c.bench_function("aes_round", |b| {
        b.iter(|| aes_round(black_box(blk), black_box(key)))
    });
    c.bench_function("aes_expand_keys", |b| {
        b.iter(|| aes_expand_keys(black_box(&[3u8; 32])))
    });
}

fn stages(c: &mut Criterion) {
    let input = sample_job(0).input().unwrap();
    let state = keccak_absorb(&input).unwrap();
    let mut pad = Scratchpad::new();
    let mut g = c.benchmark_group("stages");
    g.sample_size(10);
    g.bench_function("explode", |b| b.iter(|| explode(&state, &mut pad).unwrap()));
    g.bench_function("shuffle", |b| b.iter(|| shuffle(&state, &mut pad).unwrap()));
    g.bench_function("implode", |b| b.iter(|| implode(&state, &mut pad).unwrap()));
    g.finish();
}

fn full_hash(c: &mut Criterion) {
    let mut g = c.benchmark_group("hash");
    g.sample_size(10);
    let mut hasher = Hasher::new();
    let job = sample_job(1);
    g.bench_function("cn_haven_hash", |b| {
        b.iter(|| hasher.hash_job(black_box(&job)).unwrap())
    });
    let input = job.input().unwrap();
    let (_, trace) = hasher.hash_traced(&input).unwrap();
    g.bench_function("hash_traced", |b| {
        b.iter(|| hasher.hash_traced(&input).unwrap())
    });
    g.bench_function("trace_stats_full_hash", |b| {
        b.iter(|| trace_stats(black_box(&trace)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, primitives, stages, full_hash);
criterion_main!(benches);
