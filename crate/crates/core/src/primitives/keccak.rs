use std::fmt;

use crate::hash::HAVEN;
use crate::{Error, Result};

/// Size of the full sponge state in bytes.
pub const STATE_BYTES: usize = 200;

/// Absorption rate in bytes (capacity 512 bits).
pub const KECCAK_RATE: usize = 136;

const ROUNDS: usize = 24;

const ROUND_CONSTANTS: [u64; ROUNDS] = [
    0x0000_0000_0000_0001,
    0x0000_0000_0000_8082,
    0x8000_0000_0000_808a,
    0x8000_0000_8000_8000,
    0x0000_0000_0000_808b,
    0x0000_0000_8000_0001,
    0x8000_0000_8000_8081,
    0x8000_0000_0000_8009,
    0x0000_0000_0000_008a,
    0x0000_0000_0000_0088,
    0x0000_0000_8000_8009,
    0x0000_0000_8000_000a,
    0x0000_0000_8000_808b,
    0x8000_0000_0000_008b,
    0x8000_0000_0000_8089,
    0x8000_0000_0000_8003,
    0x8000_0000_0000_8002,
    0x8000_0000_0000_0080,
    0x0000_0000_0000_800a,
    0x8000_0000_8000_000a,
    0x8000_0000_8000_8081,
    0x8000_0000_0000_8080,
    0x0000_0000_8000_0001,
    0x8000_0000_8000_8008,
];

// rho offsets and pi destinations, walked in pi order starting from lane 1
const RHO: [u32; 24] = [
    1, 3, 6, 10, 15, 21, 28, 36, 45, 55, 2, 14, 27, 41, 56, 8, 25, 43, 62, 18, 39, 61, 20, 44,
];
const PI: [usize; 24] = [
    10, 7, 11, 17, 18, 3, 5, 16, 8, 21, 24, 4, 15, 23, 19, 13, 12, 2, 20, 14, 22, 9, 6, 1,
];

/// The 1600-bit Keccak state as 25 little-endian lanes.
///
/// Lane `i` occupies bytes `[8i, 8i + 8)` of the 200-byte view.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct KeccakState {
    lanes: [u64; 25],
}

impl KeccakState {
    pub const fn zero() -> Self {
        Self { lanes: [0; 25] }
    }

    pub const fn from_lanes(lanes: [u64; 25]) -> Self {
        Self { lanes }
    }

    pub fn lanes(&self) -> &[u64; 25] {
        &self.lanes
    }

    pub fn lanes_mut(&mut self) -> &mut [u64; 25] {
        &mut self.lanes
    }

    pub fn from_bytes(bytes: &[u8; STATE_BYTES]) -> Self {
        let mut lanes = [0u64; 25];
        for (lane, chunk) in lanes.iter_mut().zip(bytes.chunks_exact(8)) {
            *lane = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        Self { lanes }
    }

    pub fn to_bytes(&self) -> [u8; STATE_BYTES] {
        let mut out = [0u8; STATE_BYTES];
        for (chunk, lane) in out.chunks_exact_mut(8).zip(self.lanes.iter()) {
            chunk.copy_from_slice(&lane.to_le_bytes());
        }
        out
    }

    /// Parses a 200-byte slice.
    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        let arr: &[u8; STATE_BYTES] = bytes.try_into().ok()?;
        Some(Self::from_bytes(arr))
    }

    pub fn byte(&self, index: usize) -> u8 {
        (self.lanes[index / 8] >> (8 * (index % 8))) as u8
    }
}

impl fmt::Debug for KeccakState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeccakState({})", hex::encode(self.to_bytes()))
    }
}

/// Applies the 24-round Keccak-f\[1600\] permutation in place.
pub fn permute(a: &mut [u64; 25]) {
    for rc in ROUND_CONSTANTS {
        // theta
        let mut c = [0u64; 5];
        for x in 0..5 {
            c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
        }
        for x in 0..5 {
            let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
            for y in (0..25).step_by(5) {
                a[y + x] ^= d;
            }
        }

        // rho + pi
        let mut carry = a[1];
        for (&rot, &dst) in RHO.iter().zip(PI.iter()) {
            let next = a[dst];
            a[dst] = carry.rotate_left(rot);
            carry = next;
        }

        // chi
        for y in (0..25).step_by(5) {
            let row = [a[y], a[y + 1], a[y + 2], a[y + 3], a[y + 4]];
            for x in 0..5 {
                a[y + x] = row[x] ^ (!row[(x + 1) % 5] & row[(x + 2) % 5]);
            }
        }

        // iota
        a[0] ^= rc;
    }
}

/// Returns the Keccak-f\[1600\] permutation of `state`.
pub fn keccak_f1600(state: &KeccakState) -> KeccakState {
    let mut out = *state;
    permute(&mut out.lanes);
    out
}

/// CryptoNight-style absorb of an arbitrary-length input, returning the
/// whole 200-byte state rather than a truncated digest.
///
/// Padding appends `0x01`, zero-fills the block and sets the top bit of the
/// last rate byte (original Keccak padding, not the SHA-3 `0x06` domain).
pub fn absorb(input: &[u8]) -> KeccakState {
    let mut st = KeccakState::zero();
    let mut blocks = input.chunks_exact(KECCAK_RATE);
    for block in &mut blocks {
        xor_block(&mut st.lanes, block);
        permute(&mut st.lanes);
    }

    let rest = blocks.remainder();
    let mut last = [0u8; KECCAK_RATE];
    last[..rest.len()].copy_from_slice(rest);
    last[rest.len()] = 0x01;
    last[KECCAK_RATE - 1] |= 0x80;
    xor_block(&mut st.lanes, &last);
    permute(&mut st.lanes);
    st
}

/// [`absorb`] with the hash's minimum input length enforced.
pub fn keccak_absorb(input: &[u8]) -> Result<KeccakState> {
    if input.len() < HAVEN.min_input_len {
        return Err(Error::InputTooShort {
            len: input.len(),
            min: HAVEN.min_input_len,
        });
    }
    Ok(absorb(input))
}

fn xor_block(lanes: &mut [u64; 25], block: &[u8]) {
    for (lane, chunk) in lanes.iter_mut().zip(block.chunks_exact(8)) {
        *lane ^= u64::from_le_bytes(chunk.try_into().unwrap());
    }
}
