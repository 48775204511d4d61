use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::Result;

/// Integer time base covering both clock domains exactly.
///
/// One base unit is `1 / lcm(f_shuffle, f_other)` microseconds; each domain's
/// period is a whole number of units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Clocks {
    pub units_per_us: u64,
    pub shuffle_period: u64,
    pub other_period: u64,
}

impl Clocks {
    pub fn new(config: &PipelineConfig) -> Self {
        let fs = u64::from(config.shuffle_clock_mhz);
        let fo = u64::from(config.other_clock_mhz);
        let f = fs.lcm(&fo);
        Self {
            units_per_us: f,
            shuffle_period: f / fs,
            other_period: f / fo,
        }
    }

    pub fn period(&self, domain: ClockDomain) -> u64 {
        match domain {
            ClockDomain::Shuffle => self.shuffle_period,
            ClockDomain::Other => self.other_period,
        }
    }

    /// First clock edge of `domain` at or after `t`.
    pub fn align(&self, t: u64, domain: ClockDomain) -> u64 {
        t.next_multiple_of(self.period(domain))
    }

    pub fn seconds(&self, units: u64) -> f64 {
        units as f64 / (self.units_per_us as f64 * 1e6)
    }

    /// Whole shuffle ticks elapsed at `units`, rounded up.
    pub fn shuffle_ticks(&self, units: u64) -> u64 {
        units.div_ceil(self.shuffle_period)
    }

    pub fn other_ticks(&self, units: u64) -> u64 {
        units.div_ceil(self.other_period)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageName {
    Keccak,
    Explode,
    Shuffle,
    Implode,
    Finalize,
}

impl StageName {
    pub const ALL: [StageName; 5] = [
        StageName::Keccak,
        StageName::Explode,
        StageName::Shuffle,
        StageName::Implode,
        StageName::Finalize,
    ];

    pub fn domain(self) -> ClockDomain {
        match self {
            StageName::Shuffle => ClockDomain::Shuffle,
            _ => ClockDomain::Other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StageName::Keccak => "keccak",
            StageName::Explode => "explode",
            StageName::Shuffle => "shuffle",
            StageName::Implode => "implode",
            StageName::Finalize => "finalize",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockDomain {
    Shuffle,
    Other,
}

/// Cost model of one stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageModel {
    pub name: StageName,
    /// Items per hash: whole messages for Keccak and Finalize, 128-byte
    /// groups for Explode and Implode, loop iterations for Shuffle.
    pub items: u64,
    pub cycles_per_item: u64,
    /// Items processed without memory traffic (warm-up or trailing rounds).
    pub extra_items: u64,
    pub clock_domain: ClockDomain,
}

/// The five stages for `config`, in pipeline order.
pub fn stage_models(config: &PipelineConfig) -> [StageModel; 5] {
    let c = &config.stage_costs;
    let w = &config.workload;
    let model = |name: StageName, items, cycles_per_item, extra_items| StageModel {
        name,
        items,
        cycles_per_item,
        extra_items,
        clock_domain: name.domain(),
    };
    [
        model(StageName::Keccak, 1, c.keccak_cycles, 0),
        model(
            StageName::Explode,
            w.groups,
            c.explode_cycles_per_group,
            w.explode_warmup_rounds,
        ),
        model(
            StageName::Shuffle,
            w.shuffle_iterations,
            c.shuffle_cycles_per_iteration,
            0,
        ),
        model(
            StageName::Implode,
            w.implode_passes * w.groups,
            c.implode_cycles_per_group,
            w.implode_extra_rounds,
        ),
        model(StageName::Finalize, 1, c.finalize_cycles, 0),
    ]
}

/// Per-stage closed-form latency of one hash running alone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageLatency {
    pub stage: StageName,
    /// Whole-stage latency in seconds.
    pub latency_s: f64,
    /// The part spent streaming items through memory, in seconds.
    pub streaming_s: f64,
}

/// Closed-form throughput limits, in hashes per second.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// One hash at a time through every stage.
    pub single_hash_rate: f64,
    /// Port bandwidth and outstanding-slot occupancy over per-hash traffic.
    pub memory_bound_rate: f64,
    /// Dependent Shuffle round trips, overlapped across resident hashes
    /// and kernels and capped by the shared Shuffle compute.
    pub pipeline_bound_rate: f64,
    /// The slowest non-Shuffle stage, which handles one hash at a time.
    pub stage_bound_rate: f64,
    /// The tightest throughput cap: memory, pipeline or stage.
    pub min_rate: f64,
    /// Which cap attains `min_rate`.
    pub limiting: String,
    /// Shuffle ticks of one dependent read round trip plus per-iteration
    /// compute.
    pub shuffle_round_trip_ticks: f64,
    pub stage_latencies: Vec<StageLatency>,
}

impl Bounds {
    pub fn stage(&self, name: StageName) -> &StageLatency {
        self.stage_latencies
            .iter()
            .find(|s| s.stage == name)
            .expect("every stage has a latency")
    }
}

/// Closed-form rates for `config`.
pub fn theoretical_bounds(config: &PipelineConfig) -> Result<Bounds> {
    config.validate()?;
    let fs = f64::from(config.shuffle_clock_mhz) * 1e6;
    let fo = f64::from(config.other_clock_mhz) * 1e6;
    let ts = 1.0 / fs;
    let to = 1.0 / fo;
    let lat = &config.mem_latency_ticks;
    // zero-jitter latencies; jitter only adds
    let lr = lat.read_fixed as f64;
    let lw = lat.write_fixed as f64;
    let o = f64::from(config.outstanding_limit);
    let x16 = config.transfer_ticks(16) as f64;
    let x128 = config.transfer_ticks(128) as f64;
    let models = stage_models(config);
    let [keccak, explode, shuffle, implode, finalize] = models;
    let c_s = shuffle.cycles_per_item as f64;

    let keccak_s = keccak.cycles_per_item as f64 * to;
    let finalize_s = finalize.cycles_per_item as f64 * to;

    // Explode: compute then a posted burst write per group.
    let e_compute = explode.cycles_per_item as f64 * to;
    let e_period = e_compute.max(x128 * ts).max((x128 + lw) * ts / o);
    let explode_stream = explode.items as f64 * e_period;
    let explode_s = explode.extra_items as f64 * e_compute + explode_stream + (x128 + lw) * ts;

    // Shuffle: three dependent reads, each followed by a posted write.
    let round_trip = 3.0 * (x16 + lr) + c_s;
    let shuffle_stream = shuffle.items as f64 * round_trip * ts;
    let shuffle_s = shuffle_stream + (x16 + lw - c_s).max(0.0) * ts;

    // Implode: burst reads prefetched `o` groups ahead of the compute.
    let i_compute = implode.cycles_per_item as f64 * to;
    let i_period = i_compute.max(x128 * ts).max((x128 + lr) * ts / o);
    let implode_stream = implode.items as f64 * i_period;
    let implode_s = (x128 + lr) * ts + implode_stream + implode.extra_items as f64 * i_compute;

    let stage_latencies = vec![
        StageLatency {
            stage: StageName::Keccak,
            latency_s: keccak_s,
            streaming_s: 0.0,
        },
        StageLatency {
            stage: StageName::Explode,
            latency_s: explode_s,
            streaming_s: explode_stream,
        },
        StageLatency {
            stage: StageName::Shuffle,
            latency_s: shuffle_s,
            streaming_s: shuffle_stream,
        },
        StageLatency {
            stage: StageName::Implode,
            latency_s: implode_s,
            streaming_s: implode_stream,
        },
        StageLatency {
            stage: StageName::Finalize,
            latency_s: finalize_s,
            streaming_s: 0.0,
        },
    ];
    let single_hash_rate = 1.0 / stage_latencies.iter().map(|s| s.latency_s).sum::<f64>();

    let ports = f64::from(config.n_kernels) * f64::from(config.pcs_per_kernel);
    let g = explode.items as f64;
    let r = implode.items as f64;
    let i = shuffle.items as f64;
    let read_ticks = r * x128 + 3.0 * i * x16;
    let write_ticks = g * x128 + 3.0 * i * x16;
    let bandwidth_rate = ports * fs / read_ticks.max(write_ticks);
    let occupancy = g * (x128 + lw) + r * (x128 + lr) + 3.0 * i * (2.0 * x16 + lr + lw);
    let occupancy_rate = ports * o * fs / occupancy;
    let memory_bound_rate = bandwidth_rate.min(occupancy_rate);

    let kernels = f64::from(config.n_kernels);
    let overlap_rate = kernels * f64::from(config.pipeline_depth) * fs / (i * round_trip);
    let compute_rate = if c_s > 0.0 {
        kernels * fs / (i * c_s)
    } else {
        f64::INFINITY
    };
    let pipeline_bound_rate = overlap_rate.min(compute_rate);

    let serial = keccak_s.max(explode_s).max(implode_s).max(finalize_s);
    let stage_bound_rate = kernels / serial;

    let candidates = [
        ("memory", memory_bound_rate),
        ("pipeline", pipeline_bound_rate),
        ("stage", stage_bound_rate),
    ];
    let (limiting, min_rate) =
        candidates[1..]
            .iter()
            .fold(candidates[0], |acc, c| if c.1 < acc.1 { *c } else { acc });

    Ok(Bounds {
        single_hash_rate,
        memory_bound_rate,
        pipeline_bound_rate,
        stage_bound_rate,
        min_rate,
        limiting: limiting.to_string(),
        shuffle_round_trip_ticks: round_trip,
        stage_latencies,
    })
}
