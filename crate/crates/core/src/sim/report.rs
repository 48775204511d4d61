use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bounds::StageName;

/// Result of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub hashes_injected: u64,
    pub hashes_completed: u64,
    pub sim_ticks: SimTicks,
    pub elapsed_s: f64,
    /// Completed hashes per second of simulated time.
    pub hash_rate_hs: f64,
    /// Completion rate over the middle half of the run, which leaves out
    /// pipeline fill and drain. Equal to `hash_rate_hs` below 4 hashes.
    pub steady_hash_rate_hs: f64,
    /// Fraction of time each stage held at least one hash, averaged over
    /// kernels.
    pub stage_utilization: StageUtilization,
    pub fifo_occupancy: Vec<FifoOccupancy>,
    /// Hashes resident in the Shuffle unit, per kernel.
    pub shuffle_residency: Occupancy,
    pub mem_requests: MemStats,
    pub bottleneck: StageName,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timelines: Vec<HashTimeline>,
}

/// Simulated duration in each clock domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTicks {
    pub shuffle: u64,
    pub other: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageUtilization {
    pub keccak: f64,
    pub explode: f64,
    pub shuffle: f64,
    pub implode: f64,
    pub finalize: f64,
}

impl StageUtilization {
    pub fn get(&self, stage: StageName) -> f64 {
        match stage {
            StageName::Keccak => self.keccak,
            StageName::Explode => self.explode,
            StageName::Shuffle => self.shuffle,
            StageName::Implode => self.implode,
            StageName::Finalize => self.finalize,
        }
    }

    pub(crate) fn set(&mut self, stage: StageName, v: f64) {
        *match stage {
            StageName::Keccak => &mut self.keccak,
            StageName::Explode => &mut self.explode,
            StageName::Shuffle => &mut self.shuffle,
            StageName::Implode => &mut self.implode,
            StageName::Finalize => &mut self.finalize,
        } = v;
    }
}

/// Time-weighted occupancy statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub min: u64,
    pub mean: f64,
    pub max: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FifoOccupancy {
    pub name: String,
    pub capacity: u64,
    /// Aggregated over kernels: lowest minimum, mean of means, highest
    /// maximum.
    pub min: u64,
    pub mean: f64,
    pub max: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MemStats {
    pub reads: u64,
    pub writes: u64,
    pub read_bytes: u64,
    pub write_bytes: u64,
    /// Issue-to-completion latency including queueing, in shuffle ticks.
    pub mean_latency_ticks: f64,
    pub max_latency_ticks: u64,
    /// Power-of-two buckets `[lo, hi)`.
    pub latency_histogram: Vec<HistBucket>,
    /// Longest queue of requests waiting for an outstanding slot on any
    /// port.
    pub max_port_queue: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistBucket {
    pub lo: u64,
    pub hi: u64,
    pub count: u64,
}

/// Stage boundaries of one hash, in shuffle ticks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HashTimeline {
    pub hash: u64,
    pub kernel: u32,
    pub slot: u32,
    pub keccak_start: f64,
    pub keccak_end: f64,
    pub explode_start: f64,
    pub explode_end: f64,
    pub shuffle_start: f64,
    pub shuffle_end: f64,
    pub implode_start: f64,
    pub implode_end: f64,
    pub finalize_start: f64,
    pub finalize_end: f64,
}

/// A piecewise-constant level integrated over time.
#[derive(Clone, Debug, Default)]
pub(crate) struct Level {
    value: u64,
    since: u64,
    area: u128,
    nonzero: u64,
    min: u64,
    max: u64,
}

impl Level {
    pub fn set(&mut self, now: u64, value: u64) {
        self.advance(now);
        self.value = value;
        self.min = self.min.min(value);
        self.max = self.max.max(value);
    }

    pub fn add(&mut self, now: u64, delta: i64) {
        let v = self
            .value
            .checked_add_signed(delta)
            .expect("level underflow");
        self.set(now, v);
    }

    fn advance(&mut self, now: u64) {
        let dt = now - self.since;
        self.area += u128::from(self.value) * u128::from(dt);
        if self.value > 0 {
            self.nonzero += dt;
        }
        self.since = now;
    }

    /// Closes the level at `end` and summarizes it.
    pub fn finish(&mut self, end: u64) -> (Occupancy, f64) {
        self.advance(end);
        if end == 0 {
            return (Occupancy::default(), 0.0);
        }
        (
            Occupancy {
                min: self.min,
                mean: self.area as f64 / end as f64,
                max: self.max,
            },
            self.nonzero as f64 / end as f64,
        )
    }
}

/// Power-of-two latency histogram.
#[derive(Clone, Debug, Default)]
pub(crate) struct Histogram {
    buckets: BTreeMap<u32, u64>,
    sum: u128,
    count: u64,
    max: u64,
}

impl Histogram {
    pub fn record(&mut self, v: u64) {
        let b = if v == 0 { 0 } else { 64 - v.leading_zeros() };
        *self.buckets.entry(b).or_default() += 1;
        self.sum += u128::from(v);
        self.count += 1;
        self.max = self.max.max(v);
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64
        }
    }

    pub fn max(&self) -> u64 {
        self.max
    }

    pub fn buckets(&self) -> Vec<HistBucket> {
        self.buckets
            .iter()
            .map(|(&b, &count)| {
                let (lo, hi) = if b == 0 {
                    (0, 1)
                } else {
                    (1u64 << (b - 1), 1u64 << b)
                };
                HistBucket { lo, hi, count }
            })
            .collect()
    }
}
