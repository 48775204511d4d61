//! The hash dataflow: absorb, Explode, Shuffle, Implode, final permutation
//! and the family-selected finalization hash.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::primitives::aes_round_fast;
use crate::primitives::{
    aes_expand_keys, hash_final, keccak_absorb, keccak_f1600, mix_and_propagate, rounds10_x8,
    AesRoundKeys, Block128, FinalHashFamily, KeccakState,
};
use crate::scratchpad::{
    AccessTrace, MemoryBackend, PartitionedMemory, Scratchpad, Stage, SCRATCHPAD_BYTES,
};
use crate::{Error, Result};

/// Fixed parameters of the algorithm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgoConstants {
    pub memory_bytes: usize,
    /// Shuffle loop count.
    pub iterations: u32,
    /// Selects a 16-byte aligned offset below `memory_bytes`.
    pub address_mask: u32,
    pub explode_key_bytes: Range<usize>,
    pub explode_init_bytes: Range<usize>,
    pub implode_key_bytes: Range<usize>,
    pub implode_xor_bytes: Range<usize>,
    /// Keyed-round-and-mix repeats before Explode starts writing.
    pub explode_mix_rounds: usize,
    /// Keyed-round-and-mix repeats after both Implode passes.
    pub implode_extra_rounds: usize,
    pub implode_passes: usize,
    pub min_input_len: usize,
    pub default_nonce_offset: usize,
    /// Scratchpad accesses per Shuffle iteration.
    pub shuffle_accesses_per_iteration: u64,
}

pub const HAVEN: AlgoConstants = AlgoConstants {
    memory_bytes: SCRATCHPAD_BYTES,
    iterations: 0x40000,
    address_mask: 0x3F_FFF0,
    explode_key_bytes: 0..32,
    explode_init_bytes: 64..192,
    implode_key_bytes: 32..64,
    implode_xor_bytes: 64..192,
    explode_mix_rounds: 16,
    implode_extra_rounds: 16,
    implode_passes: 2,
    min_input_len: 43,
    default_nonce_offset: 39,
    shuffle_accesses_per_iteration: 6,
};

impl AlgoConstants {
    /// Number of 128-byte groups in the scratchpad.
    pub const fn groups(&self) -> usize {
        self.memory_bytes / 128
    }

    pub const fn explode_writes(&self) -> u64 {
        (self.memory_bytes / 16) as u64
    }

    pub const fn shuffle_accesses(&self) -> u64 {
        self.iterations as u64 * self.shuffle_accesses_per_iteration
    }

    pub const fn implode_reads(&self) -> u64 {
        (self.implode_passes * self.memory_bytes / 16) as u64
    }

    /// Scratchpad accesses of one full hash.
    pub const fn accesses_per_hash(&self) -> u64 {
        self.explode_writes() + self.shuffle_accesses() + self.implode_reads()
    }
}

/// A block template with a nonce to patch in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashJob {
    #[serde(with = "hex")]
    pub blob: Vec<u8>,
    pub nonce_offset: usize,
    pub nonce: u32,
}

impl HashJob {
    pub fn new(blob: Vec<u8>, nonce: u32) -> Self {
        Self {
            blob,
            nonce_offset: HAVEN.default_nonce_offset,
            nonce,
        }
    }

    pub fn with_nonce_offset(mut self, offset: usize) -> Self {
        self.nonce_offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.blob.len() < HAVEN.min_input_len {
            return Err(Error::InputTooShort {
                len: self.blob.len(),
                min: HAVEN.min_input_len,
            });
        }
        if self
            .nonce_offset
            .checked_add(4)
            .is_none_or(|end| end > self.blob.len())
        {
            return Err(Error::BadNonceOffset {
                offset: self.nonce_offset,
                len: self.blob.len(),
            });
        }
        Ok(())
    }

    /// The blob with the nonce written little-endian at `nonce_offset`.
    pub fn input(&self) -> Result<Vec<u8>> {
        let mut buf = self.blob.clone();
        self.patch_into(&mut buf, self.nonce)?;
        Ok(buf)
    }

    /// Writes `nonce` into a copy of this job's blob held in `buf`.
    pub fn patch_into(&self, buf: &mut Vec<u8>, nonce: u32) -> Result<()> {
        self.validate()?;
        if buf.len() != self.blob.len() {
            buf.clear();
            buf.extend_from_slice(&self.blob);
        }
        buf[self.nonce_offset..self.nonce_offset + 4].copy_from_slice(&nonce.to_le_bytes());
        Ok(())
    }
}

/// The two 128-bit registers carried through the Shuffle loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShuffleState {
    pub a: Block128,
    pub b: Block128,
}

impl ShuffleState {
    pub fn from_state(state: &KeccakState) -> Self {
        let h = state.lanes();
        Self {
            a: Block128::from_u64s(h[0] ^ h[4], h[1] ^ h[5]),
            b: Block128::from_u64s(h[2] ^ h[6], h[3] ^ h[7]),
        }
    }
}

fn state_blocks(state: &KeccakState, range: Range<usize>) -> [Block128; 8] {
    let bytes = state.to_bytes();
    let src = &bytes[range];
    std::array::from_fn(|i| Block128::from_slice(&src[16 * i..16 * i + 16]))
}

fn state_keys(state: &KeccakState, range: Range<usize>) -> AesRoundKeys {
    aes_expand_keys(&state.to_bytes()[range]).expect("key range is 32 bytes")
}

/// Fills the whole scratchpad from the state.
pub fn explode<B: MemoryBackend>(state: &KeccakState, pad: &mut Scratchpad<B>) -> Result<()> {
    pad.set_stage(Stage::Explode);
    let keys = state_keys(state, HAVEN.explode_key_bytes);
    let mut x = state_blocks(state, HAVEN.explode_init_bytes);
    for _ in 0..HAVEN.explode_mix_rounds {
        rounds10_x8(&mut x, &keys);
        mix_and_propagate(&mut x);
    }
    for group in 0..HAVEN.groups() as u64 {
        rounds10_x8(&mut x, &keys);
        for (i, b) in x.iter().enumerate() {
            pad.write16(group * 128 + 16 * i as u64, *b)?;
        }
    }
    Ok(())
}

/// The memory-hard loop. Reads only the register seeds from the state.
pub fn shuffle<B: MemoryBackend>(state: &KeccakState, pad: &mut Scratchpad<B>) -> Result<()> {
    pad.set_stage(Stage::Shuffle);
    let mask = u64::from(HAVEN.address_mask);
    let ShuffleState { a, mut b } = ShuffleState::from_state(state);
    let (mut al, mut ah) = (a.lo(), a.hi());
    let mut idx = al;
    for _ in 0..HAVEN.iterations {
        // AES step
        let addr = idx & mask;
        let c = aes_round_fast(pad.read16(addr)?, Block128::from_u64s(al, ah));
        pad.write16(addr, b ^ c)?;
        idx = c.lo();

        // multiply-add step
        let addr = idx & mask;
        let m = pad.read16(addr)?;
        let (cl, ch) = (m.lo(), m.hi());
        let prod = u128::from(idx) * u128::from(cl);
        al = al.wrapping_add((prod >> 64) as u64);
        ah = ah.wrapping_add(prod as u64);
        pad.write16(addr, Block128::from_u64s(al, ah))?;
        al ^= cl;
        ah ^= ch;
        idx = al;

        // division step
        let addr = idx & mask;
        let v = pad.read16(addr)?;
        let n = v.lo() as i64;
        let d = v.hi() as u32 as i32;
        let q = n.wrapping_div(i64::from(d | 5));
        pad.write16(addr, Block128::from_u64s((n ^ q) as u64, v.hi()))?;
        idx = (i64::from(!d) ^ q) as u64;

        b = c;
    }
    Ok(())
}

/// Folds the scratchpad back into state bytes 64..192. Never writes.
pub fn implode<B: MemoryBackend>(
    state: &KeccakState,
    pad: &mut Scratchpad<B>,
) -> Result<KeccakState> {
    pad.set_stage(Stage::Implode);
    let keys = state_keys(state, HAVEN.implode_key_bytes);
    let mut x = state_blocks(state, HAVEN.implode_xor_bytes);
    for _ in 0..HAVEN.implode_passes {
        for group in 0..HAVEN.groups() as u64 {
            for (i, b) in x.iter_mut().enumerate() {
                *b ^= pad.read16(group * 128 + 16 * i as u64)?;
            }
            rounds10_x8(&mut x, &keys);
            mix_and_propagate(&mut x);
        }
    }
    for _ in 0..HAVEN.implode_extra_rounds {
        rounds10_x8(&mut x, &keys);
        mix_and_propagate(&mut x);
    }
    let mut bytes = state.to_bytes();
    for (i, b) in x.iter().enumerate() {
        let at = HAVEN.implode_xor_bytes.start + 16 * i;
        bytes[at..at + 16].copy_from_slice(b.as_bytes());
    }
    Ok(KeccakState::from_bytes(&bytes))
}

/// Final permutation, family selection and finalization hash.
pub fn finalize(state: &KeccakState) -> (KeccakState, FinalHashFamily, [u8; 32]) {
    let fin = keccak_f1600(state);
    let family = FinalHashFamily::from_selector(fin.byte(0));
    let digest = hash_final(family, &fin.to_bytes());
    (fin, family, digest)
}

/// Intermediate values of one hash.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checkpoints {
    pub absorb: KeccakState,
    /// First KiB of the scratchpad after Explode.
    pub explode_head: Vec<u8>,
    /// First KiB of the scratchpad after Shuffle.
    pub shuffle_head: Vec<u8>,
    /// State after Implode, before the final permutation.
    pub implode_state: KeccakState,
    pub final_state: KeccakState,
    pub family: FinalHashFamily,
    pub digest: [u8; 32],
}

pub const CHECKPOINT_HEAD_BYTES: usize = 1024;

/// Hashes with a reusable scratchpad.
pub struct Hasher<B: MemoryBackend = PartitionedMemory> {
    pad: Scratchpad<B>,
}

impl Default for Hasher<PartitionedMemory> {
    fn default() -> Self {
        Self::new()
    }
}

impl Hasher<PartitionedMemory> {
    pub fn new() -> Self {
        Self {
            pad: Scratchpad::new(),
        }
    }
}

impl<B: MemoryBackend> Hasher<B> {
    pub fn with_pad(pad: Scratchpad<B>) -> Self {
        Self { pad }
    }

    pub fn pad(&self) -> &Scratchpad<B> {
        &self.pad
    }

    pub fn pad_mut(&mut self) -> &mut Scratchpad<B> {
        &mut self.pad
    }

    pub fn into_pad(self) -> Scratchpad<B> {
        self.pad
    }

    /// State after Implode and the final permutation, without the
    /// finalization hash.
    pub fn final_state(&mut self, input: &[u8]) -> Result<KeccakState> {
        let state = self.implode_state(input)?;
        Ok(keccak_f1600(&state))
    }

    fn implode_state(&mut self, input: &[u8]) -> Result<KeccakState> {
        let state = keccak_absorb(input)?;
        explode(&state, &mut self.pad)?;
        shuffle(&state, &mut self.pad)?;
        implode(&state, &mut self.pad)
    }

    /// Digest of an already nonce-patched input.
    pub fn hash(&mut self, input: &[u8]) -> Result<[u8; 32]> {
        let state = self.implode_state(input)?;
        Ok(finalize(&state).2)
    }

    pub fn hash_job(&mut self, job: &HashJob) -> Result<[u8; 32]> {
        self.hash(&job.input()?)
    }

    pub fn hash_with_checkpoints(&mut self, input: &[u8]) -> Result<Checkpoints> {
        let absorb = keccak_absorb(input)?;
        explode(&absorb, &mut self.pad)?;
        let explode_head = self.pad.head(CHECKPOINT_HEAD_BYTES);
        shuffle(&absorb, &mut self.pad)?;
        let shuffle_head = self.pad.head(CHECKPOINT_HEAD_BYTES);
        let implode_state = implode(&absorb, &mut self.pad)?;
        let (final_state, family, digest) = finalize(&implode_state);
        Ok(Checkpoints {
            absorb,
            explode_head,
            shuffle_head,
            implode_state,
            final_state,
            family,
            digest,
        })
    }

    /// Hashes with tracing on and returns the digest and the full trace.
    /// Records go to the in-memory trace unless a sink is installed, in
    /// which case the returned trace is empty.
    pub fn hash_traced(&mut self, input: &[u8]) -> Result<([u8; 32], AccessTrace)> {
        self.pad.reset_trace();
        self.pad.trace_capture(true);
        let res = self.hash(input);
        self.pad.trace_capture(false);
        let mut trace = self.pad.take_trace().unwrap_or_default();
        let digest = res?;
        trace.meta.input_digest_hex = Some(hex::encode(digest));
        Ok((digest, trace))
    }
}

/// Digest of `job` on a fresh scratchpad.
pub fn cn_haven_hash(job: &HashJob) -> Result<[u8; 32]> {
    Hasher::new().hash_job(job)
}
