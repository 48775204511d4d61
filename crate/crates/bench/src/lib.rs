//! Fixtures shared by the benchmarks.

use cnhaven_core::sim::{PcMapping, PipelineConfig, WorkloadShape};
use cnhaven_core::HashJob;

/// A 76-byte block template with the nonce at the default offset.
pub fn sample_job(nonce: u32) -> HashJob {
    let blob = (0..76u8)
        .map(|i| i.wrapping_mul(37).wrapping_add(11))
        .collect();
    HashJob::new(blob, nonce)
}

/// Reduced work shape so one simulated hash costs microseconds.
pub fn sim_config(depth: u32) -> PipelineConfig {
    PipelineConfig {
        pipeline_depth: depth,
        workload: WorkloadShape::scaled(1024, 64),
        ..PipelineConfig::default()
    }
}

/// Like [`sim_config`] with four interleaved ports per kernel.
pub fn wide_sim_config(depth: u32) -> PipelineConfig {
    PipelineConfig {
        pcs_per_kernel: 4,
        outstanding_limit: 256,
        pc_mapping: PcMapping::Interleaved {
            granularity_bytes: 4096,
        },
        ..sim_config(depth)
    }
}
