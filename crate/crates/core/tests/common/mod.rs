#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use cnhaven_core::corpus::{read_corpus, CorpusEntry};
use cnhaven_core::sim::{PcMapping, PipelineConfig, WorkloadShape};

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata/golden.jsonl")
}

pub fn golden() -> Vec<CorpusEntry> {
    read_corpus(BufReader::new(File::open(golden_path()).unwrap())).unwrap()
}

/// Template used for the pre-solved mining jobs below.
pub const MINING_BLOB_HEX: &str = "52f22665a60c12d289185d950ee8813609166f6b113d178d6c0fd3901ff239a1a095f20f9395650cf9380b8edb224a6b248a1e924e8fd0ae2e1a9492a3305f188cb610900f9e347fae886dc6";

/// (difficulty, nonce_start, nonce_end, lowest share) found by brute force
/// with the reference miner, nonce at offset 39.
pub const MINING_VECTORS: [(u64, u32, u64, Option<u32>); 3] = [
    (40, 0, 500, Some(31)),
    (60, 1000, 1600, Some(1027)),
    (1_000_000, 0, 30, None),
];

pub fn mining_job_json(difficulty: u64, start: u32, end: u64) -> String {
    format!(
        r#"{{"blob_hex":"{MINING_BLOB_HEX}","nonce_offset":39,"difficulty":{difficulty},"nonce_start":{start},"nonce_end":{end}}}"#
    )
}

/// Reduced work shape that keeps multi-hash runs fast.
pub fn small(depth: u32) -> PipelineConfig {
    PipelineConfig {
        pipeline_depth: depth,
        workload: WorkloadShape::scaled(1024, 64),
        ..PipelineConfig::default()
    }
}

/// Four interleaved ports per kernel with room for every stream in
/// flight, so added depth is never starved of memory.
pub fn wide_memory(depth: u32) -> PipelineConfig {
    PipelineConfig {
        pcs_per_kernel: 4,
        outstanding_limit: 256,
        pc_mapping: PcMapping::Interleaved {
            granularity_bytes: 4096,
        },
        ..small(depth)
    }
}

pub const DEPTHS: [u32; 8] = [1, 2, 4, 8, 16, 32, 64, 128];
