use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::config::{JitterModel, MemLatency};
use crate::primitives::Block128;
use crate::scratchpad::{AccessOp, MemoryBackend, PartitionedMemory};

/// Seeded sampler for per-access memory latency.
#[derive(Clone, Debug)]
pub struct LatencyModel {
    cfg: MemLatency,
    rng: ChaCha8Rng,
    tail: Option<Exp<f64>>,
}

impl LatencyModel {
    pub fn new(cfg: MemLatency) -> Self {
        let tail = match cfg.jitter {
            JitterModel::ExponentialTail { prob, mean_ticks } if prob > 0.0 && mean_ticks > 0.0 => {
                Exp::new(1.0 / mean_ticks).ok()
            }
            _ => None,
        };
        Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            tail,
        }
    }

    /// Latency of one access in shuffle ticks. Draws nothing from the
    /// generator when the configuration has no random component.
    pub fn sample(&mut self, op: AccessOp) -> u64 {
        let mut lat = match op {
            AccessOp::Read => self.cfg.read_fixed,
            AccessOp::Write => self.cfg.write_fixed,
        };
        if self.cfg.jitter_max > 0 {
            lat += self.rng.gen_range(0..=self.cfg.jitter_max);
        }
        if let (Some(exp), JitterModel::ExponentialTail { prob, .. }) =
            (&self.tail, self.cfg.jitter)
        {
            if self.rng.gen_bool(prob) {
                lat += exp.sample(&mut self.rng) as u64;
            }
        }
        lat
    }
}

/// Partitioned storage whose accesses report a modeled latency.
pub struct HbmBackend {
    mem: PartitionedMemory,
    model: LatencyModel,
}

impl HbmBackend {
    pub fn new(n_regions: usize, latency: MemLatency) -> Self {
        Self {
            mem: PartitionedMemory::new(n_regions),
            model: LatencyModel::new(latency),
        }
    }

    pub fn memory(&self) -> &PartitionedMemory {
        &self.mem
    }
}

impl MemoryBackend for HbmBackend {
    #[inline]
    fn read_block(&self, region: u16, offset: u32) -> Block128 {
        self.mem.read_block(region, offset)
    }

    #[inline]
    fn write_block(&mut self, region: u16, offset: u32, block: Block128) {
        self.mem.write_block(region, offset, block)
    }

    fn latency(&mut self, op: AccessOp) -> u64 {
        self.model.sample(op)
    }
}

/// A request waiting for or holding an outstanding slot on a port.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Request<C> {
    pub client: C,
    pub op: AccessOp,
    pub bytes: u64,
    /// Issue time in base units.
    pub issued: u64,
}

/// One memory port: separate read and write channels sharing an
/// outstanding-request limit.
#[derive(Debug)]
pub(crate) struct Port<C> {
    read_free_at: u64,
    write_free_at: u64,
    pub outstanding: u32,
    pub pending: VecDeque<Request<C>>,
    pub max_pending: usize,
}

impl<C> Default for Port<C> {
    fn default() -> Self {
        Self {
            read_free_at: 0,
            write_free_at: 0,
            outstanding: 0,
            pending: VecDeque::new(),
            max_pending: 0,
        }
    }
}

impl<C> Port<C> {
    pub fn enqueue(&mut self, req: Request<C>) {
        self.pending.push_back(req);
        self.max_pending = self.max_pending.max(self.pending.len());
    }

    pub fn next(&mut self) -> Option<Request<C>> {
        self.pending.pop_front()
    }

    /// Books the channel for a dispatched request starting no earlier than
    /// `now`, returning when the transfer ends.
    pub fn book(&mut self, op: AccessOp, now: u64, duration: u64) -> u64 {
        let free_at = match op {
            AccessOp::Read => &mut self.read_free_at,
            AccessOp::Write => &mut self.write_free_at,
        };
        let start = now.max(*free_at);
        *free_at = start + duration;
        *free_at
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_jitter_is_fixed() {
        let mut m = LatencyModel::new(MemLatency {
            read_fixed: 7,
            write_fixed: 3,
            ..MemLatency::default()
        });
        for _ in 0..100 {
            assert_eq!(m.sample(AccessOp::Read), 7);
            assert_eq!(m.sample(AccessOp::Write), 3);
        }
    }

    #[test]
    fn uniform_jitter_stays_in_range_and_is_seeded() {
        let cfg = MemLatency {
            read_fixed: 10,
            jitter_max: 5,
            seed: 42,
            ..MemLatency::default()
        };
        let a: Vec<u64> = {
            let mut m = LatencyModel::new(cfg);
            (0..1000).map(|_| m.sample(AccessOp::Read)).collect()
        };
        let b: Vec<u64> = {
            let mut m = LatencyModel::new(cfg);
            (0..1000).map(|_| m.sample(AccessOp::Read)).collect()
        };
        assert_eq!(a, b);
        assert!(a.iter().all(|l| (10..=15).contains(l)));
        assert!(a.contains(&10) && a.contains(&15));
    }

    #[test]
    fn exponential_tail_adds_latency() {
        let mut m = LatencyModel::new(MemLatency {
            read_fixed: 10,
            jitter: JitterModel::ExponentialTail {
                prob: 1.0,
                mean_ticks: 50.0,
            },
            ..MemLatency::default()
        });
        let mean = (0..10_000).map(|_| m.sample(AccessOp::Read)).sum::<u64>() as f64 / 1e4;
        assert!((55.0..62.0).contains(&mean), "{mean}");
    }

    #[test]
    fn channels_serialize_transfers() {
        let mut p: Port<()> = Port::default();
        assert_eq!(p.book(AccessOp::Read, 0, 4), 4);
        assert_eq!(p.book(AccessOp::Read, 0, 4), 8);
        assert_eq!(p.book(AccessOp::Write, 0, 4), 4);
        assert_eq!(p.book(AccessOp::Read, 20, 1), 21);
    }

    #[test]
    fn hbm_backend_stores_and_reports_latency() {
        let mut b = HbmBackend::new(2, MemLatency::default());
        b.write_block(1, 16, Block128::from_u64s(5, 6));
        assert_eq!(b.read_block(1, 16), Block128::from_u64s(5, 6));
        assert_eq!(b.latency(AccessOp::Read), 64);
    }
}
