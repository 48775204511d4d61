mod common;

use std::sync::OnceLock;

use cnhaven_core::analysis::{partition_check, trace_stats, MAX_ENTROPY_BITS};
use cnhaven_core::scratchpad::{
    read_binary, write_binary, BinaryTraceWriter, PartitionedMemory, SharedSink, TraceSink,
    BLOCK_BYTES,
};
use cnhaven_core::sim::{simulate, simulate_trace, PipelineConfig};
use cnhaven_core::{AccessOp, AccessTrace, Hasher, Scratchpad, Stage, HAVEN, SCRATCHPAD_BYTES};

fn traced() -> &'static (String, AccessTrace) {
    static T: OnceLock<(String, AccessTrace)> = OnceLock::new();
    T.get_or_init(|| {
        let e = &common::golden()[0];
        let (digest, trace) = Hasher::new()
            .hash_traced(&e.job().unwrap().input().unwrap())
            .unwrap();
        assert_eq!(hex::encode(digest), e.digest_hex);
        (e.digest_hex.clone(), trace)
    })
}

#[test]
fn counts_match_algorithm_constants() {
    let (_, t) = traced();
    assert_eq!(t.len() as u64, HAVEN.accesses_per_hash());
    assert_eq!(
        t.count(AccessOp::Write, Stage::Explode) as u64,
        HAVEN.explode_writes()
    );
    assert_eq!(
        t.count(AccessOp::Write, Stage::Explode) * BLOCK_BYTES,
        SCRATCHPAD_BYTES
    );
    assert_eq!(t.count(AccessOp::Read, Stage::Explode), 0);
    assert_eq!(
        t.count(AccessOp::Read, Stage::Implode) * BLOCK_BYTES,
        2 * SCRATCHPAD_BYTES
    );
    assert_eq!(t.count(AccessOp::Write, Stage::Implode), 0);
    let shuffle =
        t.count(AccessOp::Read, Stage::Shuffle) + t.count(AccessOp::Write, Stage::Shuffle);
    assert_eq!(shuffle as u64, HAVEN.shuffle_accesses());
    assert!(t.records.windows(2).all(|w| w[1].seq == w[0].seq + 1));
}

#[test]
fn every_access_is_aligned_and_in_bounds() {
    let (_, t) = traced();
    assert!(t
        .records
        .iter()
        .all(|r| (r.offset as usize).is_multiple_of(BLOCK_BYTES)
            && (r.offset as usize) < SCRATCHPAD_BYTES));
}

#[test]
fn implode_reads_whole_pad_twice_in_order() {
    let (_, t) = traced();
    let implode: Vec<u32> = t
        .stage(Stage::Implode)
        .records
        .iter()
        .map(|r| r.offset)
        .collect();
    let half = implode.len() / 2;
    assert_eq!(implode[..half], implode[half..]);
    assert!(implode[..half]
        .iter()
        .enumerate()
        .all(|(i, &o)| o as usize == i * BLOCK_BYTES));
}

#[test]
fn explode_is_one_sequential_run() {
    let (_, t) = traced();
    let s = trace_stats(&t.stage(Stage::Explode)).unwrap();
    assert_eq!(s.sequential_run_lengths.len(), 1);
    assert_eq!(s.sequential_run_lengths[&HAVEN.explode_writes()], 1);
    assert_eq!(s.stride_histogram.keys().copied().collect::<Vec<_>>(), [16]);
    assert!((s.address_entropy_bits - MAX_ENTROPY_BITS).abs() < 1e-9);
}

#[test]
fn shuffle_addresses_are_irregular() {
    let (_, t) = traced();
    let s = trace_stats(&t.stage(Stage::Shuffle)).unwrap();
    assert!(s.address_entropy_bits >= 16.0, "{}", s.address_entropy_bits);
    assert!(s.address_entropy_bits <= MAX_ENTROPY_BITS);
    assert_eq!(s.run_length_quantile(0.5), 1);
    // every read is followed by a write to the same block; a few more zero
    // strides come from reads that land on the block just written
    let zero = s.stride_histogram[&0];
    assert!((HAVEN.shuffle_accesses() / 2..HAVEN.shuffle_accesses() / 2 + 100).contains(&zero));
    assert_eq!(s.reads.shuffle + s.writes.shuffle, s.total_accesses);
}

#[test]
fn full_trace_stats_are_consistent() {
    let (_, t) = traced();
    let s = trace_stats(t).unwrap();
    assert_eq!(s.reads.total() + s.writes.total(), s.total_accesses);
    assert_eq!(
        s.writes.explode + s.reads.implode,
        HAVEN.explode_writes() + HAVEN.implode_reads()
    );
    let runs: u64 = s
        .sequential_run_lengths
        .iter()
        .map(|(len, n)| len * n)
        .sum();
    assert_eq!(runs, s.total_accesses);
    let q = s.reuse_distance_quantiles;
    assert_eq!(q.reuses + q.cold, s.total_accesses);
    assert!(q.p50 <= q.p90 && q.p90 <= q.p99);
}

#[test]
fn binary_round_trip_of_full_trace() {
    let (_, t) = traced();
    let mut buf = Vec::new();
    write_binary(t, &mut buf).unwrap();
    assert_eq!(buf.len(), 14 + 16 * t.len());
    assert_eq!(read_binary(buf.as_slice()).unwrap().records, t.records);
}

#[test]
fn eight_concurrent_hashes_stay_in_their_regions() {
    let entries = common::golden();
    let traces: Vec<AccessTrace> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..8u16)
            .map(|id| {
                let e = &entries[usize::from(id) + 1];
                s.spawn(move || {
                    let pad = Scratchpad::with_backend(PartitionedMemory::new(8), id);
                    let (digest, trace) = Hasher::with_pad(pad)
                        .hash_traced(&e.job().unwrap().input().unwrap())
                        .unwrap();
                    assert_eq!(hex::encode(digest), e.digest_hex);
                    trace
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(traces
        .iter()
        .enumerate()
        .all(|(i, t)| t.records.iter().all(|r| r.hash_id == i as u16)));
    let cfg = PipelineConfig {
        pipeline_depth: 8,
        ..PipelineConfig::default()
    };
    let report = partition_check(&traces, &cfg);
    assert_eq!(report.records_checked, 8 * HAVEN.accesses_per_hash());
    assert!(
        report.is_clean(),
        "{:?}",
        &report.violations[..report.violations.len().min(5)]
    );
}

#[test]
fn forged_neighbor_access_is_the_only_violation() {
    let (_, t) = traced();
    let mut forged = t.clone();
    let at = 1_000_000;
    forged.records[at].offset += SCRATCHPAD_BYTES as u32;
    let cfg = PipelineConfig {
        pipeline_depth: 2,
        ..PipelineConfig::default()
    };
    let r = partition_check(&[forged], &cfg);
    assert_eq!(r.violations.len(), 1);
    assert_eq!(
        (r.violations[0].record_index, r.violations[0].seq),
        (at, at as u64)
    );
}

#[test]
fn streaming_sink_matches_in_memory_trace() {
    let (digest, t) = traced();
    let file = tempfile::NamedTempFile::new().unwrap();
    let sink = SharedSink::new(BinaryTraceWriter::create(file.path()).unwrap());
    let mut hasher = Hasher::new();
    hasher.pad_mut().set_sink(Box::new(sink.clone()));
    let input = common::golden()[0].job().unwrap().input().unwrap();
    let (d, empty) = hasher.hash_traced(&input).unwrap();
    assert_eq!(hex::encode(d), *digest);
    assert!(empty.is_empty());
    drop(hasher);
    assert_eq!(sink.0.lock().unwrap().finish().unwrap(), t.len() as u64);
    let back = cnhaven_core::scratchpad::read_trace_file(file.path()).unwrap();
    assert_eq!(back.records, t.records);
}

#[test]
fn replay_of_real_trace_matches_synthetic_shape() {
    let (_, t) = traced();
    let cfg = PipelineConfig {
        pipeline_depth: 4,
        ..PipelineConfig::default()
    };
    let replay = simulate_trace(&cfg, 4, t).unwrap();
    let synthetic = simulate(&cfg, 4).unwrap();
    assert_eq!(replay.hashes_completed, 4);
    assert_eq!(replay.mem_requests.reads, synthetic.mem_requests.reads);
    assert_eq!(replay.mem_requests.writes, synthetic.mem_requests.writes);
    let rel = replay.hash_rate_hs / synthetic.hash_rate_hs;
    assert!((0.9..1.1).contains(&rel), "{rel}");
}
