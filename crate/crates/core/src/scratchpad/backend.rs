use super::{AccessOp, SCRATCHPAD_BLOCKS};
use crate::primitives::Block128;

/// Storage behind one or more scratchpad regions.
///
/// Offsets passed in are already validated (aligned, `< 4 MiB`). A read
/// after a write to the same `(region, offset)` returns the written block;
/// regions never alias each other.
pub trait MemoryBackend {
    fn read_block(&self, region: u16, offset: u32) -> Block128;

    fn write_block(&mut self, region: u16, offset: u32, block: Block128);

    /// Modeled latency of one access in shuffle-domain ticks. Only the
    /// pipeline simulator looks at this.
    fn latency(&mut self, _op: AccessOp) -> u64 {
        0
    }
}

impl<B: MemoryBackend + ?Sized> MemoryBackend for &mut B {
    #[inline]
    fn read_block(&self, region: u16, offset: u32) -> Block128 {
        (**self).read_block(region, offset)
    }

    #[inline]
    fn write_block(&mut self, region: u16, offset: u32, block: Block128) {
        (**self).write_block(region, offset, block)
    }

    fn latency(&mut self, op: AccessOp) -> u64 {
        (**self).latency(op)
    }
}

/// Flat in-memory storage for a fixed number of 4 MiB regions with zero
/// modeled latency. Regions are allocated on first write; unwritten regions
/// read as zero.
pub struct PartitionedMemory {
    regions: Vec<Option<Box<[Block128]>>>,
}

impl PartitionedMemory {
    pub fn new(n_regions: usize) -> Self {
        Self {
            regions: (0..n_regions).map(|_| None).collect(),
        }
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    /// Zeroes every allocated region without freeing it.
    pub fn clear(&mut self) {
        for r in self.regions.iter_mut().flatten() {
            r.fill(Block128::ZERO);
        }
    }

    /// Raw blocks of a region, if it has been written.
    pub fn region(&self, region: u16) -> Option<&[Block128]> {
        self.regions.get(region as usize)?.as_deref()
    }
}

impl MemoryBackend for PartitionedMemory {
    #[inline]
    fn read_block(&self, region: u16, offset: u32) -> Block128 {
        match &self.regions[region as usize] {
            Some(r) => r[(offset >> 4) as usize],
            None => Block128::ZERO,
        }
    }

    #[inline]
    fn write_block(&mut self, region: u16, offset: u32, block: Block128) {
        let slot = &mut self.regions[region as usize];
        let r =
            slot.get_or_insert_with(|| vec![Block128::ZERO; SCRATCHPAD_BLOCKS].into_boxed_slice());
        r[(offset >> 4) as usize] = block;
    }
}
