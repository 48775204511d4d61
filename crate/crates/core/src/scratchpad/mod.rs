//! The per-hash 4 MiB scratchpad, its memory backends and access tracing.
//!
//! A [`Scratchpad`] is a view of one 4 MiB region of a [`MemoryBackend`].
//! Every access is 16-byte aligned and bounds-checked, and can optionally be
//! recorded as an [`AccessRecord`] into an in-memory [`AccessTrace`] or a
//! streaming [`TraceSink`].

mod backend;
mod trace;

pub use self::backend::{MemoryBackend, PartitionedMemory};
pub use self::trace::{
    read_binary, read_jsonl, read_trace_file, write_binary, write_jsonl, AccessOp, AccessRecord,
    AccessTrace, BinaryTraceWriter, JsonLinesWriter, SharedSink, Stage, TraceFormat, TraceMeta,
    TraceSink, TRACE_MAGIC, TRACE_VERSION,
};

use crate::primitives::Block128;
use crate::sim::PipelineConfig;
use crate::{Error, Result};

/// Scratchpad size in bytes.
pub const SCRATCHPAD_BYTES: usize = 1 << 22;

/// Access granularity in bytes.
pub const BLOCK_BYTES: usize = 16;

/// Number of 16-byte blocks in one scratchpad.
pub const SCRATCHPAD_BLOCKS: usize = SCRATCHPAD_BYTES / BLOCK_BYTES;

/// Total modeled HBM capacity (8 GiB).
pub const HBM_BYTES: u64 = 8 << 30;

/// Byte base of the region owned by `hash_id`. Regions are laid out
/// contiguously, `hash_id * 4 MiB`.
pub fn region_base(hash_id: u32, config: &PipelineConfig) -> Result<u64> {
    if hash_id >= config.pipeline_depth {
        return Err(Error::BadHashId {
            hash_id,
            depth: config.pipeline_depth,
        });
    }
    Ok(u64::from(hash_id) * SCRATCHPAD_BYTES as u64)
}

#[inline]
fn check_offset(offset: u64) -> Result<u32> {
    if offset >= SCRATCHPAD_BYTES as u64 {
        return Err(Error::OutOfBounds(offset));
    }
    if !offset.is_multiple_of(BLOCK_BYTES as u64) {
        return Err(Error::Misaligned(offset));
    }
    Ok(offset as u32)
}

enum TraceTarget {
    Memory(AccessTrace),
    Sink(Box<dyn TraceSink>),
}

/// A 4 MiB working buffer owned by one in-flight hash.
pub struct Scratchpad<B: MemoryBackend = PartitionedMemory> {
    backend: B,
    hash_id: u16,
    stage: Stage,
    tracing: bool,
    seq: u64,
    target: TraceTarget,
}

impl Scratchpad<PartitionedMemory> {
    /// A zeroed scratchpad with its own single-region backend.
    pub fn new() -> Self {
        Self::with_backend(PartitionedMemory::new(1), 0)
    }
}

impl Default for Scratchpad<PartitionedMemory> {
    fn default() -> Self {
        Self::new()
    }
}

impl<B: MemoryBackend> Scratchpad<B> {
    pub fn with_backend(backend: B, hash_id: u16) -> Self {
        Self {
            backend,
            hash_id,
            stage: Stage::Explode,
            tracing: false,
            seq: 0,
            target: TraceTarget::Memory(AccessTrace::default()),
        }
    }

    pub fn hash_id(&self) -> u16 {
        self.hash_id
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    /// Sets the stage tag attached to subsequent trace records.
    pub fn set_stage(&mut self, stage: Stage) {
        self.stage = stage;
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn backend_mut(&mut self) -> &mut B {
        &mut self.backend
    }

    pub fn into_backend(self) -> B {
        self.backend
    }

    /// Starts or stops recording. Disabling keeps what was recorded so far.
    pub fn trace_capture(&mut self, enable: bool) {
        self.tracing = enable;
    }

    pub fn is_tracing(&self) -> bool {
        self.tracing
    }

    /// Routes records to `sink` instead of the in-memory trace.
    pub fn set_sink(&mut self, sink: Box<dyn TraceSink>) {
        self.target = TraceTarget::Sink(sink);
    }

    /// Takes back a sink installed with [`set_sink`](Self::set_sink) and
    /// reverts to in-memory recording.
    pub fn take_sink(&mut self) -> Option<Box<dyn TraceSink>> {
        match std::mem::replace(
            &mut self.target,
            TraceTarget::Memory(AccessTrace::default()),
        ) {
            TraceTarget::Sink(s) => Some(s),
            TraceTarget::Memory(t) => {
                self.target = TraceTarget::Memory(t);
                None
            }
        }
    }

    /// The in-memory trace, unless records are going to an external sink.
    pub fn trace(&self) -> Option<&AccessTrace> {
        match &self.target {
            TraceTarget::Memory(t) => Some(t),
            TraceTarget::Sink(_) => None,
        }
    }

    /// Removes and returns the in-memory trace, leaving an empty one.
    pub fn take_trace(&mut self) -> Option<AccessTrace> {
        match &mut self.target {
            TraceTarget::Memory(t) => Some(std::mem::take(t)),
            TraceTarget::Sink(_) => None,
        }
    }

    /// Resets the sequence counter and clears the in-memory trace.
    pub fn reset_trace(&mut self) {
        self.seq = 0;
        if let TraceTarget::Memory(t) = &mut self.target {
            t.records.clear();
        }
    }

    #[inline]
    fn record(&mut self, op: AccessOp, offset: u32) {
        let rec = AccessRecord {
            op,
            stage: self.stage,
            hash_id: self.hash_id,
            seq: self.seq,
            offset,
        };
        self.seq += 1;
        match &mut self.target {
            TraceTarget::Memory(t) => t.records.push(rec),
            TraceTarget::Sink(s) => s.append(&rec),
        }
    }

    /// Reads the 16 bytes at `offset`.
    #[inline]
    pub fn read16(&mut self, offset: u64) -> Result<Block128> {
        let off = check_offset(offset)?;
        if self.tracing {
            self.record(AccessOp::Read, off);
        }
        Ok(self.backend.read_block(self.hash_id, off))
    }

    /// Writes 16 bytes at `offset`.
    #[inline]
    pub fn write16(&mut self, offset: u64, block: Block128) -> Result<()> {
        let off = check_offset(offset)?;
        if self.tracing {
            self.record(AccessOp::Write, off);
        }
        self.backend.write_block(self.hash_id, off, block);
        Ok(())
    }

    /// Untraced read, for inspection and checkpoints.
    pub fn peek16(&self, offset: u64) -> Result<Block128> {
        let off = check_offset(offset)?;
        Ok(self.backend.read_block(self.hash_id, off))
    }

    /// Untraced copy of the first `len` bytes (rounded down to whole blocks).
    pub fn head(&self, len: usize) -> Vec<u8> {
        let len = len.min(SCRATCHPAD_BYTES) / BLOCK_BYTES * BLOCK_BYTES;
        let mut out = Vec::with_capacity(len);
        for off in (0..len).step_by(BLOCK_BYTES) {
            out.extend_from_slice(&self.backend.read_block(self.hash_id, off as u32).0);
        }
        out
    }
}
