use std::collections::BTreeMap;

use cnhaven_core::analysis::trace_stats;
use cnhaven_core::mining::{meets_target, TargetRule};
use cnhaven_core::scratchpad::{read_binary, read_jsonl, write_binary, write_jsonl};
use cnhaven_core::sim::{simulate, theoretical_bounds, PipelineConfig, WorkloadShape};
use cnhaven_core::{AccessOp, AccessRecord, AccessTrace, Stage};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn record() -> impl Strategy<Value = AccessRecord> {
    (any::<bool>(), 0usize..3, 0u16..4, 0u32..(1 << 18)).prop_map(|(w, s, h, block)| AccessRecord {
        op: if w { AccessOp::Write } else { AccessOp::Read },
        stage: Stage::ALL[s],
        hash_id: h,
        seq: 0,
        offset: block * 16,
    })
}

fn trace() -> impl Strategy<Value = AccessTrace> {
    prop::collection::vec(record(), 0..300).prop_map(|mut v| {
        for (i, r) in v.iter_mut().enumerate() {
            r.seq = i as u64;
        }
        AccessTrace::new(v)
    })
}

proptest! {
    #[test]
    fn trace_formats_round_trip(t in trace()) {
        let mut bin = Vec::new();
        write_binary(&t, &mut bin).unwrap();
        prop_assert_eq!(&read_binary(bin.as_slice()).unwrap().records, &t.records);
        let mut jsonl = Vec::new();
        write_jsonl(&t, &mut jsonl).unwrap();
        prop_assert_eq!(&read_jsonl(jsonl.as_slice()).unwrap().records, &t.records);
    }

    #[test]
    fn totals_and_entropy_ignore_order(t in trace(), seed in any::<u64>()) {
        let a = trace_stats(&t).unwrap();
        let mut records = t.records.clone();
        records.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        for (i, r) in records.iter_mut().enumerate() {
            r.seq = i as u64;
        }
        let b = trace_stats(&AccessTrace::new(records)).unwrap();
        prop_assert_eq!(a.total_accesses, b.total_accesses);
        prop_assert_eq!(a.reads, b.reads);
        prop_assert_eq!(a.writes, b.writes);
        prop_assert!((a.address_entropy_bits - b.address_entropy_bits).abs() < 1e-9);
        prop_assert!(a.address_entropy_bits >= 0.0 && a.address_entropy_bits <= 18.0);
        prop_assert_eq!(a.reads.total() + a.writes.total(), a.total_accesses);
        let covered: u64 = a.sequential_run_lengths.iter().map(|(l, n)| l * n).sum();
        prop_assert_eq!(covered, a.total_accesses);
        let strides: u64 = a.stride_histogram.values().sum();
        let hashes = t.records.iter().map(|r| r.hash_id).collect::<std::collections::BTreeSet<_>>().len() as u64;
        prop_assert_eq!(strides, a.total_accesses - hashes);
    }

    #[test]
    fn share_rules_are_monotone_in_difficulty(digest in any::<[u8; 32]>(), d in 1u64..u64::MAX) {
        for rule in [TargetRule::Pool, TargetRule::Strict] {
            if meets_target(&digest, d + 1, rule) {
                prop_assert!(meets_target(&digest, d, rule));
            }
        }
        prop_assert!(meets_target(&digest, 1, TargetRule::Pool));
        if meets_target(&digest, d, TargetRule::Strict) {
            let top = u64::from_le_bytes(digest[24..].try_into().unwrap());
            prop_assert!(u128::from(top) < (1u128 << 64) / u128::from(d) + 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_configs_terminate_and_conserve(
        depth in 1u32..24,
        fifos in proptest::array::uniform4(1u32..4),
        outstanding in 1u32..96,
        pcs in 1u32..4,
        read in 1u64..200,
        jitter in 0u64..50,
        seed in any::<u64>(),
        n in 1u64..24,
    ) {
        let mut cfg = PipelineConfig {
            pipeline_depth: depth,
            outstanding_limit: outstanding,
            pcs_per_kernel: pcs,
            workload: WorkloadShape::scaled(128, 16),
            ..PipelineConfig::default()
        };
        cfg.fifo_depths.keccak_to_explode = fifos[0];
        cfg.fifo_depths.explode_to_shuffle = fifos[1];
        cfg.fifo_depths.shuffle_to_implode = fifos[2];
        cfg.fifo_depths.implode_to_finalize = fifos[3];
        cfg.mem_latency_ticks.read_fixed = read;
        cfg.mem_latency_ticks.jitter_max = jitter;
        cfg.mem_latency_ticks.seed = seed;
        let r = simulate(&cfg, n).unwrap();
        prop_assert_eq!(r.hashes_completed, n);
        for (f, cap) in r.fifo_occupancy.iter().zip(cfg.fifo_depths.as_array()) {
            prop_assert!(f.max <= u64::from(cap));
        }
        let b = theoretical_bounds(&cfg).unwrap();
        prop_assert!(r.hash_rate_hs <= b.min_rate * 1.0001 + 1e-9, "{} > {}", r.hash_rate_hs, b.min_rate);
        let stage_sum: BTreeMap<_, _> = [("reads", r.mem_requests.reads), ("writes", r.mem_requests.writes)].into();
        let w = cfg.workload;
        prop_assert_eq!(stage_sum["reads"], n * (3 * w.shuffle_iterations + w.implode_passes * w.groups));
    }
}
