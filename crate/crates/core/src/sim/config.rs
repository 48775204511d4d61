use serde::{Deserialize, Serialize};

use crate::hash::HAVEN;
use crate::scratchpad::{HBM_BYTES, SCRATCHPAD_BYTES};
use crate::{Error, Result};

/// Largest supported number of in-flight hashes per kernel.
pub const MAX_PIPELINE_DEPTH: u32 = 128;

/// Accelerator model parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Scratchpad slots per kernel, i.e. hashes resident between Explode
    /// and the end of Implode.
    pub pipeline_depth: u32,
    pub shuffle_clock_mhz: u32,
    pub other_clock_mhz: u32,
    pub fifo_depths: FifoDepths,
    pub mem_latency_ticks: MemLatency,
    /// Requests in flight per memory port, reads and writes together.
    pub outstanding_limit: u32,
    pub n_kernels: u32,
    pub pcs_per_kernel: u32,
    /// Transfer width of one port channel per shuffle tick.
    pub pc_bytes_per_tick: u32,
    pub pc_mapping: PcMapping,
    pub stage_costs: StageCosts,
    pub workload: WorkloadShape,
    /// Keep per-hash stage timestamps in the report.
    pub record_timelines: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pipeline_depth: 1,
            shuffle_clock_mhz: 500,
            other_clock_mhz: 200,
            fifo_depths: FifoDepths::default(),
            mem_latency_ticks: MemLatency::default(),
            outstanding_limit: 64,
            n_kernels: 1,
            pcs_per_kernel: 1,
            pc_bytes_per_tick: 32,
            pc_mapping: PcMapping::Slot,
            stage_costs: StageCosts::default(),
            workload: WorkloadShape::default(),
            record_timelines: false,
        }
    }
}

/// Capacities of the four inter-stage FIFOs, in hashes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FifoDepths {
    pub keccak_to_explode: u32,
    pub explode_to_shuffle: u32,
    pub shuffle_to_implode: u32,
    pub implode_to_finalize: u32,
}

impl Default for FifoDepths {
    fn default() -> Self {
        Self {
            keccak_to_explode: 2,
            explode_to_shuffle: 2,
            shuffle_to_implode: 2,
            implode_to_finalize: 2,
        }
    }
}

impl FifoDepths {
    pub fn as_array(&self) -> [u32; 4] {
        [
            self.keccak_to_explode,
            self.explode_to_shuffle,
            self.shuffle_to_implode,
            self.implode_to_finalize,
        ]
    }
}

/// Memory latency in shuffle ticks: `fixed + jitter`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemLatency {
    pub read_fixed: u64,
    pub write_fixed: u64,
    pub jitter_max: u64,
    pub seed: u64,
    pub jitter: JitterModel,
}

impl Default for MemLatency {
    fn default() -> Self {
        Self {
            read_fixed: 64,
            write_fixed: 32,
            jitter_max: 0,
            seed: 0,
            jitter: JitterModel::Uniform,
        }
    }
}

/// Distribution of the random latency component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum JitterModel {
    /// Uniform on `0..=jitter_max`.
    Uniform,
    /// Uniform on `0..=jitter_max` plus, with probability `prob`, an
    /// exponential tail of the given mean (rounded down to whole ticks).
    ExponentialTail { prob: f64, mean_ticks: f64 },
}

/// How scratchpad addresses are spread over a kernel's memory ports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PcMapping {
    /// Every access of a slot goes to port `slot % pcs_per_kernel`.
    Slot,
    /// Absolute addresses are interleaved over the ports in chunks of
    /// `granularity_bytes`.
    Interleaved { granularity_bytes: u32 },
}

/// Cycles per item in each stage's own clock domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageCosts {
    pub keccak_cycles: u64,
    pub explode_cycles_per_group: u64,
    pub shuffle_cycles_per_iteration: u64,
    pub implode_cycles_per_group: u64,
    pub finalize_cycles: u64,
}

impl Default for StageCosts {
    fn default() -> Self {
        Self {
            keccak_cycles: 24,
            explode_cycles_per_group: 10,
            shuffle_cycles_per_iteration: 1,
            implode_cycles_per_group: 10,
            finalize_cycles: 100,
        }
    }
}

/// Amount of work per hash. Defaults to the real algorithm; smaller shapes
/// keep large sweeps fast.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadShape {
    pub shuffle_iterations: u64,
    /// 128-byte groups per scratchpad.
    pub groups: u64,
    pub explode_warmup_rounds: u64,
    pub implode_passes: u64,
    pub implode_extra_rounds: u64,
}

impl Default for WorkloadShape {
    fn default() -> Self {
        Self {
            shuffle_iterations: u64::from(HAVEN.iterations),
            groups: HAVEN.groups() as u64,
            explode_warmup_rounds: HAVEN.explode_mix_rounds as u64,
            implode_passes: HAVEN.implode_passes as u64,
            implode_extra_rounds: HAVEN.implode_extra_rounds as u64,
        }
    }
}

impl WorkloadShape {
    /// A reduced shape with the same structure.
    pub fn scaled(shuffle_iterations: u64, groups: u64) -> Self {
        Self {
            shuffle_iterations,
            groups,
            ..Self::default()
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_PIPELINE_DEPTH).contains(&self.pipeline_depth) {
            return Err(invalid(format!(
                "pipeline_depth {} outside 1..={MAX_PIPELINE_DEPTH}",
                self.pipeline_depth
            )));
        }
        if self.shuffle_clock_mhz == 0 || self.other_clock_mhz == 0 {
            return Err(invalid("clock frequencies must be positive"));
        }
        if self.fifo_depths.as_array().contains(&0) {
            return Err(invalid("FIFO depths must be positive"));
        }
        if self.outstanding_limit == 0 {
            return Err(invalid("outstanding_limit must be positive"));
        }
        if self.n_kernels == 0 || self.pcs_per_kernel == 0 {
            return Err(invalid("n_kernels and pcs_per_kernel must be positive"));
        }
        if self.pc_bytes_per_tick == 0 {
            return Err(invalid("pc_bytes_per_tick must be positive"));
        }
        if let PcMapping::Interleaved { granularity_bytes } = self.pc_mapping {
            if granularity_bytes < 128 || !granularity_bytes.is_power_of_two() {
                return Err(invalid(
                    "interleave granularity must be a power of two of at least 128 bytes",
                ));
            }
        }
        if let JitterModel::ExponentialTail { prob, mean_ticks } = self.mem_latency_ticks.jitter {
            if !(0.0..=1.0).contains(&prob) || !(mean_ticks.is_finite() && mean_ticks >= 0.0) {
                return Err(invalid(
                    "exponential tail needs 0 <= prob <= 1 and a finite mean >= 0",
                ));
            }
        }
        let w = &self.workload;
        if w.shuffle_iterations == 0 || w.groups == 0 || w.implode_passes == 0 {
            return Err(invalid(
                "workload iterations, groups and passes must be positive",
            ));
        }
        if w.groups * 128 > SCRATCHPAD_BYTES as u64 {
            return Err(invalid("workload groups exceed one scratchpad"));
        }
        let total =
            u64::from(self.n_kernels) * u64::from(self.pipeline_depth) * SCRATCHPAD_BYTES as u64;
        if total > HBM_BYTES {
            return Err(invalid(format!(
                "{} kernels x {} slots of 4 MiB exceed the 8 GiB of modeled memory",
                self.n_kernels, self.pipeline_depth
            )));
        }
        Ok(())
    }

    /// Transfer ticks for `bytes` on one channel.
    pub fn transfer_ticks(&self, bytes: u64) -> u64 {
        bytes.div_ceil(u64::from(self.pc_bytes_per_tick))
    }
}
