//! Statistics over scratchpad access traces.
//!
//! Strides, sequential runs and reuse distances are measured between
//! consecutive accesses of the same `hash_id`, so traces of several hashes
//! can be concatenated or interleaved.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scratchpad::{
    region_base, AccessOp, AccessTrace, Stage, BLOCK_BYTES, SCRATCHPAD_BLOCKS, SCRATCHPAD_BYTES,
};
use crate::sim::PipelineConfig;
use crate::{Error, Result};

/// Upper bound of [`TraceStats::address_entropy_bits`]: log2 of the number
/// of blocks in a scratchpad.
pub const MAX_ENTROPY_BITS: f64 = 18.0;

/// Accesses per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub explode: u64,
    pub shuffle: u64,
    pub implode: u64,
}

impl StageCounts {
    pub fn get(&self, stage: Stage) -> u64 {
        match stage {
            Stage::Explode => self.explode,
            Stage::Shuffle => self.shuffle,
            Stage::Implode => self.implode,
        }
    }

    fn bump(&mut self, stage: Stage) {
        *match stage {
            Stage::Explode => &mut self.explode,
            Stage::Shuffle => &mut self.shuffle,
            Stage::Implode => &mut self.implode,
        } += 1;
    }

    pub fn total(&self) -> u64 {
        self.explode + self.shuffle + self.implode
    }
}

/// Nearest-rank quantiles of the reuse distance, the number of distinct
/// blocks touched between two accesses to the same block. First touches
/// have no reuse distance and are counted in `cold`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReuseQuantiles {
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub reuses: u64,
    pub cold: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub total_accesses: u64,
    pub reads: StageCounts,
    pub writes: StageCounts,
    /// Signed byte stride between consecutive accesses of a hash, to count.
    pub stride_histogram: BTreeMap<i64, u64>,
    /// Length of maximal runs with stride +16, to count. Every access
    /// belongs to exactly one run.
    pub sequential_run_lengths: BTreeMap<u64, u64>,
    /// Plug-in entropy of the block-offset distribution.
    pub address_entropy_bits: f64,
    pub reuse_distance_quantiles: ReuseQuantiles,
}

impl TraceStats {
    /// Nearest-rank quantile of the run-length distribution, 0 when empty.
    pub fn run_length_quantile(&self, q: f64) -> u64 {
        let runs: u64 = self.sequential_run_lengths.values().sum();
        if runs == 0 {
            return 0;
        }
        let rank = nearest_rank(q, runs);
        let mut seen = 0;
        for (&len, &count) in &self.sequential_run_lengths {
            seen += count;
            if seen >= rank {
                return len;
            }
        }
        unreachable!()
    }
}

fn nearest_rank(q: f64, n: u64) -> u64 {
    ((q * n as f64).ceil() as u64).clamp(1, n)
}

/// Prefix sums over a 0/1 array.
struct Fenwick(Vec<i32>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Self(vec![0; n + 1])
    }

    fn add(&mut self, i: usize, delta: i32) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of entries `0..i`.
    fn prefix(&self, i: usize) -> i64 {
        let (mut i, mut s) = (i, 0i64);
        while i > 0 {
            s += i64::from(self.0[i]);
            i &= i - 1;
        }
        s
    }
}

#[derive(Default)]
struct HashCursor {
    last_seq: Option<u64>,
    last_offset: u32,
    run: u64,
}

/// Computes every statistic in one pass over `trace`.
///
/// Fails with [`Error::MalformedTrace`] when an offset is misaligned or
/// outside the scratchpad, or when `seq` does not increase within a hash.
pub fn trace_stats(trace: &AccessTrace) -> Result<TraceStats> {
    let n = trace.records.len();
    let mut stats = TraceStats {
        total_accesses: n as u64,
        ..TraceStats::default()
    };
    let mut block_counts = vec![0u32; SCRATCHPAD_BLOCKS];
    let mut cursors: HashMap<u16, HashCursor> = HashMap::new();
    let mut last_touch: HashMap<(u16, u32), usize> = HashMap::new();
    let mut live = Fenwick::new(n);
    let mut distances = Vec::new();
    let mut cold = 0u64;

    for (i, r) in trace.records.iter().enumerate() {
        if r.offset as usize >= SCRATCHPAD_BYTES || !(r.offset as usize).is_multiple_of(BLOCK_BYTES)
        {
            return Err(Error::MalformedTrace(format!(
                "record {i}: offset {:#x} is not an aligned scratchpad offset",
                r.offset
            )));
        }
        match r.op {
            AccessOp::Read => stats.reads.bump(r.stage),
            AccessOp::Write => stats.writes.bump(r.stage),
        }
        let block = r.offset / BLOCK_BYTES as u32;
        block_counts[block as usize] += 1;

        let cur = cursors.entry(r.hash_id).or_default();
        match cur.last_seq {
            Some(prev) if r.seq <= prev => {
                return Err(Error::MalformedTrace(format!(
                    "record {i}: seq {} does not follow {prev} for hash_id {}",
                    r.seq, r.hash_id
                )));
            }
            Some(_) => {
                let stride = i64::from(r.offset) - i64::from(cur.last_offset);
                *stats.stride_histogram.entry(stride).or_default() += 1;
                if stride == BLOCK_BYTES as i64 {
                    cur.run += 1;
                } else {
                    *stats.sequential_run_lengths.entry(cur.run).or_default() += 1;
                    cur.run = 1;
                }
            }
            None => cur.run = 1,
        }
        cur.last_seq = Some(r.seq);
        cur.last_offset = r.offset;

        match last_touch.insert((r.hash_id, block), i) {
            Some(prev) => {
                let between = live.prefix(i) - live.prefix(prev + 1);
                distances.push(between as u64);
                live.add(prev, -1);
            }
            None => cold += 1,
        }
        live.add(i, 1);
    }
    for cur in cursors.values().filter(|c| c.run > 0) {
        *stats.sequential_run_lengths.entry(cur.run).or_default() += 1;
    }

    if n > 0 {
        let total = n as f64;
        stats.address_entropy_bits = block_counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = f64::from(c) / total;
                -p * p.log2()
            })
            .sum::<f64>()
            .max(0.0);
    }

    distances.sort_unstable();
    let reuses = distances.len() as u64;
    let q = |q: f64| {
        if reuses == 0 {
            0
        } else {
            distances[nearest_rank(q, reuses) as usize - 1]
        }
    };
    stats.reuse_distance_quantiles = ReuseQuantiles {
        p50: q(0.5),
        p90: q(0.9),
        p99: q(0.99),
        reuses,
        cold,
    };
    Ok(stats)
}

/// Why a record falls outside its partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `hash_id` is not below the configured pipeline depth.
    BadHashId,
    Misaligned,
    /// The absolute address lies past the end of the hash's region.
    OutsideRegion,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub trace_index: usize,
    pub record_index: usize,
    pub seq: u64,
    pub hash_id: u16,
    pub offset: u32,
    /// `region_base + offset`, when the hash_id has a region.
    pub absolute_address: Option<u64>,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub traces_checked: usize,
    pub records_checked: u64,
    pub violations: Vec<Violation>,
}

impl PartitionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every access lands inside the region owned by its
/// `hash_id` under `config`. Violations are reported, not raised.
pub fn partition_check(traces: &[AccessTrace], config: &PipelineConfig) -> PartitionReport {
    let violations: Vec<Violation> = traces
        .par_iter()
        .enumerate()
        .flat_map_iter(|(t, trace)| {
            trace.records.iter().enumerate().filter_map(move |(i, r)| {
                let base = region_base(u32::from(r.hash_id), config).ok();
                let kind = if base.is_none() {
                    ViolationKind::BadHashId
                } else if !(r.offset as usize).is_multiple_of(BLOCK_BYTES) {
                    ViolationKind::Misaligned
                } else if r.offset as usize >= SCRATCHPAD_BYTES {
                    ViolationKind::OutsideRegion
                } else {
                    return None;
                };
                Some(Violation {
                    trace_index: t,
                    record_index: i,
                    seq: r.seq,
                    hash_id: r.hash_id,
                    offset: r.offset,
                    absolute_address: base.map(|b| b + u64::from(r.offset)),
                    kind,
                })
            })
        })
        .collect();
    PartitionReport {
        traces_checked: traces.len(),
        records_checked: traces.iter().map(|t| t.len() as u64).sum(),
        violations,
    }
}
