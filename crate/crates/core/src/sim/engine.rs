use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bounds::{ClockDomain, Clocks, StageName};
use super::config::{PcMapping, PipelineConfig};
use super::memory::{LatencyModel, Port, Request};
use super::report::{
    FifoOccupancy, HashTimeline, Histogram, Level, MemStats, Occupancy, SimReport, SimTicks,
    StageUtilization,
};
use crate::scratchpad::{AccessOp, SCRATCHPAD_BYTES};
use crate::{Error, Result};

const FIFO_NAMES: [&str; 4] = [
    "keccak_to_explode",
    "explode_to_shuffle",
    "shuffle_to_implode",
    "implode_to_finalize",
];
const K2E: usize = 0;
const E2S: usize = 1;
const S2I: usize = 2;
const I2F: usize = 3;

/// Source of Shuffle addresses, which only matter for interleaved port
/// mapping.
#[derive(Clone, Debug)]
pub(crate) enum Addresses {
    /// Uniform random block offsets from a seeded generator.
    Synthetic,
    /// The read offsets of one recorded hash, three per iteration.
    Replay(Arc<Vec<u32>>),
}

#[derive(Clone, Copy, Debug)]
enum Client {
    ExplodeWrite { k: usize },
    ImplodeRead { k: usize, index: u64 },
    ShuffleRead { k: usize, slot: u32 },
    ShuffleWrite { k: usize, slot: u32 },
}

#[derive(Clone, Copy, Debug)]
enum Ev {
    KeccakDone {
        k: usize,
    },
    ExplodeCompute {
        k: usize,
    },
    ShuffleCompute {
        k: usize,
        slot: u32,
    },
    ImplodeCompute {
        k: usize,
    },
    FinalizeDone {
        k: usize,
    },
    MemDone {
        port: usize,
        client: Client,
        issued: u64,
    },
}

struct Scheduled {
    time: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // min-heap on (time, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Clone, Copy, Debug)]
struct Item {
    hash: u64,
    slot: u32,
}

struct Fifo {
    cap: usize,
    q: VecDeque<Item>,
    level: Level,
}

impl Fifo {
    fn has_space(&self) -> bool {
        self.q.len() < self.cap
    }

    fn push(&mut self, now: u64, item: Item) {
        debug_assert!(self.has_space());
        self.q.push_back(item);
        self.level.set(now, self.q.len() as u64);
    }

    fn pop(&mut self, now: u64) -> Option<Item> {
        let item = self.q.pop_front()?;
        self.level.set(now, self.q.len() as u64);
        Some(item)
    }
}

struct ExplodeJob {
    item: Item,
    warm: bool,
    next_group: u64,
    computing: bool,
    inflight: u32,
}

struct Thread {
    item: Item,
    iter: u64,
    step: u8,
    addr: u32,
    writes_inflight: u32,
    computed: bool,
}

struct ImplodeJob {
    item: Item,
    issued: u64,
    computed: u64,
    /// Arrival flags for the reads in the prefetch window.
    arrived: Vec<bool>,
    computing: bool,
    extra: bool,
}

struct Kernel {
    input: VecDeque<u64>,
    keccak: Option<u64>,
    keccak_out: Option<u64>,
    fifos: [Fifo; 4],
    free_slots: VecDeque<u32>,
    explode: Option<ExplodeJob>,
    explode_out: Option<Item>,
    threads: Vec<Option<Thread>>,
    compute_q: VecDeque<u32>,
    compute_busy: bool,
    shuffle_done: VecDeque<Item>,
    implode: Option<ImplodeJob>,
    implode_out: Option<Item>,
    finalize: Option<u64>,
    activity: [Level; 5],
    addr_rng: ChaCha8Rng,
}

/// Discrete-event model of one accelerator configuration.
pub(crate) struct Engine {
    cfg: PipelineConfig,
    clocks: Clocks,
    addresses: Addresses,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    now: u64,
    kernels: Vec<Kernel>,
    ports: Vec<Port<Client>>,
    latency: LatencyModel,
    hist: Histogram,
    mem: MemStats,
    timelines: Vec<HashTimeline>,
    record_timelines: bool,
    injected: u64,
    completed: u64,
    completion_times: Vec<u64>,
    x16: u64,
    x128: u64,
}

impl Engine {
    /// Builds an engine without validating `cfg`, so tests can construct
    /// configurations that `simulate` would reject.
    pub fn new(cfg: PipelineConfig, addresses: Addresses) -> Self {
        let clocks = Clocks::new(&cfg);
        let depth = cfg.pipeline_depth;
        let caps = cfg.fifo_depths.as_array();
        let kernels = (0..cfg.n_kernels)
            .map(|k| Kernel {
                input: VecDeque::new(),
                keccak: None,
                keccak_out: None,
                fifos: std::array::from_fn(|i| Fifo {
                    cap: caps[i] as usize,
                    q: VecDeque::new(),
                    level: Level::default(),
                }),
                free_slots: (0..depth).collect(),
                explode: None,
                explode_out: None,
                threads: (0..depth).map(|_| None).collect(),
                compute_q: VecDeque::new(),
                compute_busy: false,
                shuffle_done: VecDeque::new(),
                implode: None,
                implode_out: None,
                finalize: None,
                activity: Default::default(),
                addr_rng: ChaCha8Rng::seed_from_u64(
                    cfg.mem_latency_ticks.seed ^ 0x5348_5546_0000_0000 ^ u64::from(k),
                ),
            })
            .collect();
        let n_ports = (cfg.n_kernels * cfg.pcs_per_kernel) as usize;
        Self {
            x16: cfg.transfer_ticks(16),
            x128: cfg.transfer_ticks(128),
            latency: LatencyModel::new(cfg.mem_latency_ticks),
            record_timelines: cfg.record_timelines,
            ports: (0..n_ports).map(|_| Port::default()).collect(),
            cfg,
            clocks,
            addresses,
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0,
            kernels,
            hist: Histogram::default(),
            mem: MemStats::default(),
            timelines: Vec::new(),
            injected: 0,
            completed: 0,
            completion_times: Vec::new(),
        }
    }

    pub fn run(mut self, n_hashes: u64) -> Result<SimReport> {
        let n_kernels = self.kernels.len() as u64;
        for h in 0..n_hashes {
            self.kernels[(h % n_kernels) as usize].input.push_back(h);
        }
        self.injected = n_hashes;
        if self.record_timelines {
            self.timelines = (0..n_hashes)
                .map(|h| HashTimeline {
                    hash: h,
                    kernel: (h % n_kernels) as u32,
                    ..Default::default()
                })
                .collect();
        }
        for k in 0..self.kernels.len() {
            self.kick(k);
        }
        while let Some(s) = self.heap.pop() {
            debug_assert!(s.time >= self.now);
            self.now = s.time;
            self.handle(s.ev);
        }
        if self.completed != self.injected {
            return Err(Error::Deadlock {
                tick: self.clocks.shuffle_ticks(self.now),
                remaining: self.injected - self.completed,
                detail: self.describe_stall(),
            });
        }
        Ok(self.report())
    }

    fn schedule(&mut self, time: u64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Scheduled {
            time,
            seq: self.seq,
            ev,
        });
    }

    fn cycles(&self, domain: ClockDomain, n: u64) -> u64 {
        self.clocks.align(self.now, domain) + n * self.clocks.period(domain)
    }

    fn mark(&mut self, hash: u64, f: impl FnOnce(&mut HashTimeline, f64)) {
        if self.record_timelines {
            let t = self.now as f64 / self.clocks.shuffle_period as f64;
            f(&mut self.timelines[hash as usize], t);
        }
    }

    fn set_activity(&mut self, k: usize, stage: StageName, value: u64) {
        let now = self.now;
        self.kernels[k].activity[stage as usize].set(now, value);
    }

    fn handle(&mut self, ev: Ev) {
        match ev {
            Ev::KeccakDone { k } => {
                let h = self.kernels[k].keccak.take().expect("keccak busy");
                self.kernels[k].keccak_out = Some(h);
                self.set_activity(k, StageName::Keccak, 0);
                self.mark(h, |t, v| t.keccak_end = v);
                self.kick(k);
            }
            Ev::ExplodeCompute { k } => {
                let job = self.kernels[k].explode.as_mut().expect("explode job");
                job.computing = false;
                if job.warm {
                    job.warm = false;
                } else {
                    let (slot, group) = (job.item.slot, job.next_group);
                    job.next_group += 1;
                    job.inflight += 1;
                    self.issue(
                        k,
                        slot,
                        group * 128,
                        AccessOp::Write,
                        128,
                        Client::ExplodeWrite { k },
                    );
                }
                self.kick(k);
            }
            Ev::ShuffleCompute { k, slot } => {
                self.kernels[k].compute_busy = false;
                let iterations = self.cfg.workload.shuffle_iterations;
                let t = self.kernels[k].threads[slot as usize]
                    .as_mut()
                    .expect("resident thread");
                t.iter += 1;
                t.step = 0;
                if t.iter < iterations {
                    self.shuffle_read(k, slot);
                } else {
                    t.computed = true;
                    self.try_retire(k, slot);
                }
                self.kick(k);
            }
            Ev::ImplodeCompute { k } => {
                let window = self.cfg.outstanding_limit as u64;
                let total = self.cfg.workload.implode_passes * self.cfg.workload.groups;
                let job = self.kernels[k].implode.as_mut().expect("implode job");
                job.computing = false;
                if job.extra {
                    let item = job.item;
                    self.kernels[k].implode = None;
                    self.kernels[k].implode_out = Some(item);
                    self.kernels[k].free_slots.push_back(item.slot);
                    self.set_activity(k, StageName::Implode, 0);
                    self.mark(item.hash, |t, v| t.implode_end = v);
                } else {
                    job.arrived[(job.computed % window) as usize] = false;
                    job.computed += 1;
                    if job.computed == total {
                        job.extra = true;
                        job.computing = true;
                        let n = self.cfg.workload.implode_extra_rounds
                            * self.cfg.stage_costs.implode_cycles_per_group;
                        let at = self.cycles(ClockDomain::Other, n);
                        self.schedule(at, Ev::ImplodeCompute { k });
                    }
                }
                self.kick(k);
            }
            Ev::FinalizeDone { k } => {
                let h = self.kernels[k].finalize.take().expect("finalize busy");
                self.completed += 1;
                self.completion_times.push(self.now);
                self.set_activity(k, StageName::Finalize, 0);
                self.mark(h, |t, v| t.finalize_end = v);
                self.kick(k);
            }
            Ev::MemDone {
                port,
                client,
                issued,
            } => {
                let p = &mut self.ports[port];
                p.outstanding -= 1;
                let lat = self.clocks.shuffle_ticks(self.now - issued);
                self.hist.record(lat);
                self.dispatch(port);
                match client {
                    Client::ExplodeWrite { k } => {
                        self.kernels[k]
                            .explode
                            .as_mut()
                            .expect("explode job")
                            .inflight -= 1;
                        self.kick(k);
                    }
                    Client::ImplodeRead { k, index } => {
                        let window = self.cfg.outstanding_limit as u64;
                        let job = self.kernels[k].implode.as_mut().expect("implode job");
                        job.arrived[(index % window) as usize] = true;
                        self.kick(k);
                    }
                    Client::ShuffleRead { k, slot } => {
                        let t = self.kernels[k].threads[slot as usize]
                            .as_mut()
                            .expect("resident thread");
                        t.writes_inflight += 1;
                        let (addr, step) = (t.addr, t.step);
                        self.issue(
                            k,
                            slot,
                            u64::from(addr),
                            AccessOp::Write,
                            16,
                            Client::ShuffleWrite { k, slot },
                        );
                        if step < 2 {
                            self.kernels[k].threads[slot as usize]
                                .as_mut()
                                .unwrap()
                                .step += 1;
                            self.shuffle_read(k, slot);
                        } else {
                            self.kernels[k].compute_q.push_back(slot);
                            self.kick(k);
                        }
                    }
                    Client::ShuffleWrite { k, slot } => {
                        self.kernels[k].threads[slot as usize]
                            .as_mut()
                            .expect("resident thread")
                            .writes_inflight -= 1;
                        self.try_retire(k, slot);
                        self.kick(k);
                    }
                }
            }
        }
    }

    fn shuffle_read(&mut self, k: usize, slot: u32) {
        let addr = self.next_shuffle_addr(k, slot);
        self.kernels[k].threads[slot as usize]
            .as_mut()
            .unwrap()
            .addr = addr;
        self.issue(
            k,
            slot,
            u64::from(addr),
            AccessOp::Read,
            16,
            Client::ShuffleRead { k, slot },
        );
    }

    fn next_shuffle_addr(&mut self, k: usize, slot: u32) -> u32 {
        let needs_addr = matches!(self.cfg.pc_mapping, PcMapping::Interleaved { .. })
            && self.cfg.pcs_per_kernel > 1;
        match &self.addresses {
            Addresses::Replay(addrs) => {
                let t = self.kernels[k].threads[slot as usize].as_ref().unwrap();
                let i = (t.iter * 3 + u64::from(t.step)) as usize;
                addrs[i % addrs.len()]
            }
            Addresses::Synthetic if needs_addr => {
                self.kernels[k].addr_rng.gen::<u32>() & crate::HAVEN.address_mask
            }
            Addresses::Synthetic => 0,
        }
    }

    fn try_retire(&mut self, k: usize, slot: u32) {
        let done = {
            let t = self.kernels[k].threads[slot as usize].as_ref().unwrap();
            t.computed && t.writes_inflight == 0
        };
        if done {
            let t = self.kernels[k].threads[slot as usize].take().unwrap();
            self.kernels[k].activity[StageName::Shuffle as usize].add(self.now, -1);
            self.kernels[k].shuffle_done.push_back(t.item);
            self.mark(t.item.hash, |tl, v| tl.shuffle_end = v);
        }
    }

    fn port_of(&self, k: usize, slot: u32, offset: u64) -> usize {
        let pcs = u64::from(self.cfg.pcs_per_kernel);
        let local = match self.cfg.pc_mapping {
            PcMapping::Slot => u64::from(slot) % pcs,
            PcMapping::Interleaved { granularity_bytes } => {
                let abs = u64::from(slot) * SCRATCHPAD_BYTES as u64 + offset;
                (abs / u64::from(granularity_bytes)) % pcs
            }
        };
        k * pcs as usize + local as usize
    }

    fn issue(
        &mut self,
        k: usize,
        slot: u32,
        offset: u64,
        op: AccessOp,
        bytes: u64,
        client: Client,
    ) {
        match op {
            AccessOp::Read => {
                self.mem.reads += 1;
                self.mem.read_bytes += bytes;
            }
            AccessOp::Write => {
                self.mem.writes += 1;
                self.mem.write_bytes += bytes;
            }
        }
        let port = self.port_of(k, slot, offset);
        self.ports[port].enqueue(Request {
            client,
            op,
            bytes,
            issued: self.now,
        });
        self.dispatch(port);
    }

    fn dispatch(&mut self, port: usize) {
        let limit = self.cfg.outstanding_limit;
        let start = self.clocks.align(self.now, ClockDomain::Shuffle);
        let sp = self.clocks.shuffle_period;
        while self.ports[port].outstanding < limit {
            let Some(req) = self.ports[port].next() else {
                break;
            };
            let xfer = if req.bytes == 128 {
                self.x128
            } else {
                self.x16
            };
            let end = self.ports[port].book(req.op, start, xfer * sp);
            let done = end + self.latency.sample(req.op) * sp;
            self.ports[port].outstanding += 1;
            self.schedule(
                done,
                Ev::MemDone {
                    port,
                    client: req.client,
                    issued: req.issued,
                },
            );
        }
    }

    /// Moves hashes forward in kernel `k` until nothing else can start.
    fn kick(&mut self, k: usize) {
        loop {
            let mut progress = false;
            progress |= self.step_finalize(k);
            progress |= self.step_implode(k);
            progress |= self.step_shuffle(k);
            progress |= self.step_explode(k);
            progress |= self.step_keccak(k);
            if !progress {
                break;
            }
        }
    }

    fn step_keccak(&mut self, k: usize) -> bool {
        let now = self.now;
        let mut progress = false;
        let kern = &mut self.kernels[k];
        if let Some(h) = kern.keccak_out {
            if kern.fifos[K2E].has_space() {
                kern.fifos[K2E].push(
                    now,
                    Item {
                        hash: h,
                        slot: u32::MAX,
                    },
                );
                kern.keccak_out = None;
                progress = true;
            }
        }
        if kern.keccak.is_none() && kern.keccak_out.is_none() {
            if let Some(h) = kern.input.pop_front() {
                kern.keccak = Some(h);
                let at = self.cycles(ClockDomain::Other, self.cfg.stage_costs.keccak_cycles);
                self.schedule(at, Ev::KeccakDone { k });
                self.set_activity(k, StageName::Keccak, 1);
                self.mark(h, |t, v| t.keccak_start = v);
                progress = true;
            }
        }
        progress
    }

    fn step_explode(&mut self, k: usize) -> bool {
        let now = self.now;
        let mut progress = false;
        let limit = self.cfg.outstanding_limit;
        let groups = self.cfg.workload.groups;
        let kern = &mut self.kernels[k];
        if let Some(item) = kern.explode_out {
            if kern.fifos[E2S].has_space() {
                kern.fifos[E2S].push(now, item);
                kern.explode_out = None;
                progress = true;
            }
        }
        if kern.explode.is_none() && kern.explode_out.is_none() && !kern.free_slots.is_empty() {
            if let Some(mut item) = kern.fifos[K2E].pop(now) {
                item.slot = kern.free_slots.pop_front().unwrap();
                kern.explode = Some(ExplodeJob {
                    item,
                    warm: true,
                    next_group: 0,
                    computing: true,
                    inflight: 0,
                });
                let n = self.cfg.workload.explode_warmup_rounds
                    * self.cfg.stage_costs.explode_cycles_per_group;
                let at = self.cycles(ClockDomain::Other, n);
                self.schedule(at, Ev::ExplodeCompute { k });
                self.set_activity(k, StageName::Explode, 1);
                self.mark(item.hash, |t, v| t.explode_start = v);
                if self.record_timelines {
                    self.timelines[item.hash as usize].slot = item.slot;
                }
                return true;
            }
        }
        let kern = &mut self.kernels[k];
        if let Some(job) = kern.explode.as_mut() {
            if !job.computing {
                if job.next_group < groups {
                    if job.inflight < limit {
                        job.computing = true;
                        let at = self.cycles(
                            ClockDomain::Other,
                            self.cfg.stage_costs.explode_cycles_per_group,
                        );
                        self.schedule(at, Ev::ExplodeCompute { k });
                        progress = true;
                    }
                } else if job.inflight == 0 {
                    let item = job.item;
                    kern.explode = None;
                    kern.explode_out = Some(item);
                    self.set_activity(k, StageName::Explode, 0);
                    self.mark(item.hash, |t, v| t.explode_end = v);
                    progress = true;
                }
            }
        }
        progress
    }

    fn step_shuffle(&mut self, k: usize) -> bool {
        let now = self.now;
        let mut progress = false;
        // retire finished threads
        while !self.kernels[k].shuffle_done.is_empty() && self.kernels[k].fifos[S2I].has_space() {
            let item = self.kernels[k].shuffle_done.pop_front().unwrap();
            self.kernels[k].fifos[S2I].push(now, item);
            progress = true;
        }
        // admit new threads
        while let Some(item) = self.kernels[k].fifos[E2S].pop(now) {
            self.kernels[k].threads[item.slot as usize] = Some(Thread {
                item,
                iter: 0,
                step: 0,
                addr: 0,
                writes_inflight: 0,
                computed: false,
            });
            self.kernels[k].activity[StageName::Shuffle as usize].add(now, 1);
            self.mark(item.hash, |t, v| t.shuffle_start = v);
            self.shuffle_read(k, item.slot);
            progress = true;
        }
        // shared compute
        if !self.kernels[k].compute_busy {
            if let Some(slot) = self.kernels[k].compute_q.pop_front() {
                self.kernels[k].compute_busy = true;
                let at = self.cycles(
                    ClockDomain::Shuffle,
                    self.cfg.stage_costs.shuffle_cycles_per_iteration,
                );
                self.schedule(at, Ev::ShuffleCompute { k, slot });
                progress = true;
            }
        }
        progress
    }

    fn step_implode(&mut self, k: usize) -> bool {
        let now = self.now;
        let mut progress = false;
        let window = u64::from(self.cfg.outstanding_limit);
        let total = self.cfg.workload.implode_passes * self.cfg.workload.groups;
        let groups = self.cfg.workload.groups;
        let kern = &mut self.kernels[k];
        if let Some(item) = kern.implode_out {
            if kern.fifos[I2F].has_space() {
                kern.fifos[I2F].push(
                    now,
                    Item {
                        hash: item.hash,
                        slot: u32::MAX,
                    },
                );
                kern.implode_out = None;
                progress = true;
            }
        }
        if kern.implode.is_none() && kern.implode_out.is_none() {
            if let Some(item) = kern.fifos[S2I].pop(now) {
                kern.implode = Some(ImplodeJob {
                    item,
                    issued: 0,
                    computed: 0,
                    arrived: vec![false; window as usize],
                    computing: false,
                    extra: false,
                });
                self.set_activity(k, StageName::Implode, 1);
                self.mark(item.hash, |t, v| t.implode_start = v);
                progress = true;
            }
        }
        if self.kernels[k].implode.is_none() {
            return progress;
        }
        // prefetch
        loop {
            let job = self.kernels[k].implode.as_mut().unwrap();
            if job.extra || job.issued >= total || job.issued - job.computed >= window {
                break;
            }
            let (index, slot) = (job.issued, job.item.slot);
            job.issued += 1;
            self.issue(
                k,
                slot,
                (index % groups) * 128,
                AccessOp::Read,
                128,
                Client::ImplodeRead { k, index },
            );
            progress = true;
        }
        // compute in order
        let job = self.kernels[k].implode.as_mut().unwrap();
        if !job.extra && !job.computing && job.arrived[(job.computed % window) as usize] {
            job.computing = true;
            let at = self.cycles(
                ClockDomain::Other,
                self.cfg.stage_costs.implode_cycles_per_group,
            );
            self.schedule(at, Ev::ImplodeCompute { k });
            progress = true;
        }
        progress
    }

    fn step_finalize(&mut self, k: usize) -> bool {
        let now = self.now;
        let kern = &mut self.kernels[k];
        if kern.finalize.is_some() {
            return false;
        }
        let Some(item) = kern.fifos[I2F].pop(now) else {
            return false;
        };
        kern.finalize = Some(item.hash);
        let at = self.cycles(ClockDomain::Other, self.cfg.stage_costs.finalize_cycles);
        self.schedule(at, Ev::FinalizeDone { k });
        self.set_activity(k, StageName::Finalize, 1);
        self.mark(item.hash, |t, v| t.finalize_start = v);
        true
    }

    fn describe_stall(&self) -> String {
        let mut parts = Vec::new();
        for (k, kern) in self.kernels.iter().enumerate() {
            let fifos: Vec<String> = kern
                .fifos
                .iter()
                .zip(FIFO_NAMES)
                .map(|(f, name)| format!("{name} {}/{}", f.q.len(), f.cap))
                .collect();
            parts.push(format!(
                "kernel {k}: {} waiting, {} free slots, {}",
                kern.input.len(),
                kern.free_slots.len(),
                fifos.join(", ")
            ));
        }
        parts.join("; ")
    }

    fn report(mut self) -> SimReport {
        let end = self.now;
        let n_k = self.kernels.len() as f64;
        let mut util = StageUtilization::default();
        let mut residency = Occupancy::default();
        let mut fifo_stats: Vec<FifoOccupancy> = FIFO_NAMES
            .iter()
            .zip(self.cfg.fifo_depths.as_array())
            .map(|(name, cap)| FifoOccupancy {
                name: name.to_string(),
                capacity: u64::from(cap),
                min: u64::MAX,
                mean: 0.0,
                max: 0,
            })
            .collect();
        for kern in &mut self.kernels {
            for stage in StageName::ALL {
                let (occ, busy) = kern.activity[stage as usize].finish(end);
                util.set(stage, util.get(stage) + busy / n_k);
                if stage == StageName::Shuffle {
                    residency.max = residency.max.max(occ.max);
                    residency.mean += occ.mean / n_k;
                }
            }
            for (f, stat) in kern.fifos.iter_mut().zip(fifo_stats.iter_mut()) {
                let (occ, _) = f.level.finish(end);
                stat.min = stat.min.min(occ.min);
                stat.mean += occ.mean / n_k;
                stat.max = stat.max.max(occ.max);
            }
        }
        for stat in &mut fifo_stats {
            if stat.min == u64::MAX {
                stat.min = 0;
            }
        }
        let bottleneck = StageName::ALL
            .into_iter()
            .fold(StageName::Shuffle, |best, s| {
                if util.get(s) > util.get(best) {
                    s
                } else {
                    best
                }
            });
        let elapsed_s = self.clocks.seconds(end);
        let hash_rate_hs = if end == 0 {
            0.0
        } else {
            self.completed as f64 / elapsed_s
        };
        let n = self.completion_times.len();
        let steady_hash_rate_hs = if n >= 4 {
            let (a, b) = (n / 4, 3 * n / 4);
            let span = self.completion_times[b] - self.completion_times[a];
            if span == 0 {
                hash_rate_hs
            } else {
                (b - a) as f64 / self.clocks.seconds(span)
            }
        } else {
            hash_rate_hs
        };
        self.mem.mean_latency_ticks = self.hist.mean();
        self.mem.max_latency_ticks = self.hist.max();
        self.mem.latency_histogram = self.hist.buckets();
        self.mem.max_port_queue = self
            .ports
            .iter()
            .map(|p| p.max_pending as u64)
            .max()
            .unwrap_or(0);
        SimReport {
            hashes_injected: self.injected,
            hashes_completed: self.completed,
            sim_ticks: SimTicks {
                shuffle: self.clocks.shuffle_ticks(end),
                other: self.clocks.other_ticks(end),
            },
            elapsed_s,
            hash_rate_hs,
            steady_hash_rate_hs,
            stage_utilization: util,
            fifo_occupancy: fifo_stats,
            shuffle_residency: residency,
            mem_requests: self.mem,
            bottleneck,
            timelines: self.timelines,
        }
    }
}
