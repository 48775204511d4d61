//! Discrete-event model of a pipelined multi-hash accelerator.
//!
//! Each kernel is a chain Keccak → Explode → Shuffle → Implode → Finalize
//! joined by bounded FIFOs. Explode takes one of `pipeline_depth` scratchpad
//! slots and Implode returns it, so at most that many hashes are between
//! the two. Shuffle is a single time-multiplexed unit that interleaves all
//! resident hashes; each of its scratchpad reads waits for the previous one.
//! Explode and Implode stream 128-byte bursts with several requests in
//! flight. Shuffle runs on its own clock, everything else on the other.
//!
//! Memory is a set of ports, `pcs_per_kernel` per kernel, each with a read
//! and a write channel and a shared limit on outstanding requests. A
//! request occupies its channel for `ceil(bytes / pc_bytes_per_tick)` ticks
//! and completes after a further `fixed + jitter` ticks.

mod bounds;
mod config;
mod engine;
mod memory;
mod report;

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

pub use self::bounds::{
    stage_models, theoretical_bounds, Bounds, ClockDomain, Clocks, StageLatency, StageModel,
    StageName,
};
pub use self::config::{
    FifoDepths, JitterModel, MemLatency, PcMapping, PipelineConfig, StageCosts, WorkloadShape,
    MAX_PIPELINE_DEPTH,
};
pub use self::memory::{HbmBackend, LatencyModel};
pub use self::report::{
    FifoOccupancy, HashTimeline, HistBucket, MemStats, Occupancy, SimReport, SimTicks,
    StageUtilization,
};

use self::engine::{Addresses, Engine};
use crate::scratchpad::{AccessOp, AccessTrace, Stage};
use crate::{Error, Result};

/// Runs `n_hashes` through the model described by `config`.
pub fn simulate(config: &PipelineConfig, n_hashes: u64) -> Result<SimReport> {
    config.validate()?;
    Engine::new(config.clone(), Addresses::Synthetic).run(n_hashes)
}

/// Like [`simulate`], with the work shape and Shuffle addresses of a
/// recorded single-hash trace replayed for every hash.
pub fn simulate_trace(
    config: &PipelineConfig,
    n_hashes: u64,
    trace: &AccessTrace,
) -> Result<SimReport> {
    let (workload, addrs) = replay_workload(trace, config.workload)?;
    let config = PipelineConfig {
        workload,
        ..config.clone()
    };
    config.validate()?;
    Engine::new(config, Addresses::Replay(Arc::new(addrs))).run(n_hashes)
}

/// Derives the work shape and Shuffle read offsets from a trace of one hash.
fn replay_workload(trace: &AccessTrace, base: WorkloadShape) -> Result<(WorkloadShape, Vec<u32>)> {
    let malformed = |m: String| Error::MalformedTrace(m);
    let Some(first) = trace.records.first() else {
        return Err(malformed("empty trace cannot be replayed".into()));
    };
    if trace.records.iter().any(|r| r.hash_id != first.hash_id) {
        return Err(malformed("replay needs a trace of a single hash_id".into()));
    }
    let explode_writes = trace.count(AccessOp::Write, Stage::Explode);
    let implode_reads = trace.count(AccessOp::Read, Stage::Implode);
    if explode_writes == 0 || !explode_writes.is_multiple_of(8) {
        return Err(malformed(format!(
            "{explode_writes} explode writes is not a whole number of 128-byte groups"
        )));
    }
    let groups = (explode_writes / 8) as u64;
    if implode_reads == 0 || !implode_reads.is_multiple_of(explode_writes) {
        return Err(malformed(format!(
            "{implode_reads} implode reads is not a whole number of passes over {explode_writes} blocks"
        )));
    }
    let shuffle: Vec<_> = trace
        .records
        .iter()
        .filter(|r| r.stage == Stage::Shuffle)
        .collect();
    if shuffle.is_empty() || shuffle.len() % 6 != 0 {
        return Err(malformed(format!(
            "{} shuffle accesses is not a whole number of iterations",
            shuffle.len()
        )));
    }
    let mut addrs = Vec::with_capacity(shuffle.len() / 2);
    for (i, pair) in shuffle.chunks_exact(2).enumerate() {
        let (r, w) = (pair[0], pair[1]);
        if r.op != AccessOp::Read || w.op != AccessOp::Write || r.offset != w.offset {
            return Err(malformed(format!(
                "shuffle access pair {i} is not a read then a write of the same block"
            )));
        }
        addrs.push(r.offset);
    }
    let workload = WorkloadShape {
        shuffle_iterations: (shuffle.len() / 6) as u64,
        groups,
        implode_passes: (implode_reads / explode_writes) as u64,
        ..base
    };
    Ok((workload, addrs))
}

/// One report per configuration, in grid order. Configurations run in
/// parallel; a failing entry does not stop the others.
pub fn sweep(grid: &[PipelineConfig], n_hashes: u64) -> Result<Vec<Result<SimReport>>> {
    if grid.is_empty() {
        return Err(Error::ConfigInvalid("sweep grid is empty".into()));
    }
    Ok(grid.par_iter().map(|cfg| simulate(cfg, n_hashes)).collect())
}

/// Configurations identical to `base` except for `pipeline_depth`.
pub fn depth_grid(base: &PipelineConfig, depths: &[u32]) -> Vec<PipelineConfig> {
    depths
        .iter()
        .map(|&d| PipelineConfig {
            pipeline_depth: d,
            ..base.clone()
        })
        .collect()
}

#[derive(serde::Serialize)]
struct CsvRow<'a> {
    pipeline_depth: u32,
    shuffle_clock_mhz: u32,
    other_clock_mhz: u32,
    read_fixed: u64,
    write_fixed: u64,
    jitter_max: u64,
    seed: u64,
    outstanding_limit: u32,
    n_kernels: u32,
    pcs_per_kernel: u32,
    hashes_completed: Option<u64>,
    hash_rate_hs: Option<f64>,
    bottleneck: Option<&'a str>,
    shuffle_utilization: Option<f64>,
    mean_mem_latency_ticks: Option<f64>,
    error: Option<String>,
}

/// Writes one CSV row per sweep entry.
pub fn write_sweep_csv(
    grid: &[PipelineConfig],
    results: &[Result<SimReport>],
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (cfg, res) in grid.iter().zip(results) {
        let lat = &cfg.mem_latency_ticks;
        let ok = res.as_ref().ok();
        w.serialize(CsvRow {
            pipeline_depth: cfg.pipeline_depth,
            shuffle_clock_mhz: cfg.shuffle_clock_mhz,
            other_clock_mhz: cfg.other_clock_mhz,
            read_fixed: lat.read_fixed,
            write_fixed: lat.write_fixed,
            jitter_max: lat.jitter_max,
            seed: lat.seed,
            outstanding_limit: cfg.outstanding_limit,
            n_kernels: cfg.n_kernels,
            pcs_per_kernel: cfg.pcs_per_kernel,
            hashes_completed: ok.map(|r| r.hashes_completed),
            hash_rate_hs: ok.map(|r| r.hash_rate_hs),
            bottleneck: ok.map(|r| r.bottleneck.name()),
            shuffle_utilization: ok.map(|r| r.stage_utilization.shuffle),
            mean_mem_latency_ticks: ok.map(|r| r.mem_requests.mean_latency_ticks),
            error: res.as_ref().err().map(|e| e.to_string()),
        })
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}
