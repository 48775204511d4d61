use std::fmt;
use std::ops::{BitXor, BitXorAssign};

use crate::{Error, Result};

/// Number of round keys used by Explode, Implode and per-group encryption.
pub const AES_ROUNDS: usize = 10;

/// A 128-bit block, also viewable as two little-endian 64-bit words.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(C, align(16))]
pub struct Block128(pub [u8; 16]);

impl Block128 {
    pub const ZERO: Self = Self([0; 16]);

    pub fn from_u64s(lo: u64, hi: u64) -> Self {
        let mut b = [0u8; 16];
        b[..8].copy_from_slice(&lo.to_le_bytes());
        b[8..].copy_from_slice(&hi.to_le_bytes());
        Self(b)
    }

    pub fn from_slice(bytes: &[u8]) -> Self {
        Self(bytes.try_into().expect("block slice must be 16 bytes"))
    }

    #[inline]
    pub fn lo(&self) -> u64 {
        u64::from_le_bytes(self.0[..8].try_into().unwrap())
    }

    #[inline]
    pub fn hi(&self) -> u64 {
        u64::from_le_bytes(self.0[8..].try_into().unwrap())
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    #[inline]
    fn column(&self, c: usize) -> u32 {
        u32::from_le_bytes(self.0[4 * c..4 * c + 4].try_into().unwrap())
    }
}

impl BitXor for Block128 {
    type Output = Self;

    #[inline]
    fn bitxor(self, rhs: Self) -> Self {
        Self::from_u64s(self.lo() ^ rhs.lo(), self.hi() ^ rhs.hi())
    }
}

impl BitXorAssign for Block128 {
    #[inline]
    fn bitxor_assign(&mut self, rhs: Self) {
        *self = *self ^ rhs;
    }
}

impl fmt::Debug for Block128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Block128({})", hex::encode(self.0))
    }
}

#[rustfmt::skip]
const SBOX: [u8; 256] = [
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
];

const fn xtime(x: u8) -> u8 {
    (x << 1) ^ (((x >> 7) & 1) * 0x1b)
}

// Combined SubBytes+MixColumns table for row 0; rows 1..3 are byte rotations.
const fn make_tables() -> [[u32; 256]; 4] {
    let mut t = [[0u32; 256]; 4];
    let mut i = 0;
    while i < 256 {
        let s = SBOX[i];
        let s2 = xtime(s);
        let s3 = s2 ^ s;
        let w = (s2 as u32) | ((s as u32) << 8) | ((s as u32) << 16) | ((s3 as u32) << 24);
        t[0][i] = w;
        t[1][i] = w.rotate_left(8);
        t[2][i] = w.rotate_left(16);
        t[3][i] = w.rotate_left(24);
        i += 1;
    }
    t
}

static TABLES: [[u32; 256]; 4] = make_tables();

/// One AES encryption round with the semantics of the x86 `AESENC`
/// instruction: ShiftRows, SubBytes, MixColumns, then XOR with `key`.
///
/// There is no final-round variant; every round mixes columns.
#[inline]
pub fn aes_round(block: Block128, key: Block128) -> Block128 {
    let t = &TABLES;
    let x = [
        block.column(0),
        block.column(1),
        block.column(2),
        block.column(3),
    ];
    let mut out = [0u8; 16];
    for c in 0..4 {
        let col = t[0][(x[c] & 0xff) as usize]
            ^ t[1][((x[(c + 1) % 4] >> 8) & 0xff) as usize]
            ^ t[2][((x[(c + 2) % 4] >> 16) & 0xff) as usize]
            ^ t[3][(x[(c + 3) % 4] >> 24) as usize]
            ^ key.column(c);
        out[4 * c..4 * c + 4].copy_from_slice(&col.to_le_bytes());
    }
    Block128(out)
}

/// The ten round keys derived from a 32-byte seed.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct AesRoundKeys {
    pub keys: [Block128; AES_ROUNDS],
}

impl AesRoundKeys {
    pub fn iter(&self) -> impl Iterator<Item = &Block128> {
        self.keys.iter()
    }
}

/// Expands a 32-byte seed with the AES-256 key schedule and keeps the first
/// ten round keys. Keys 0 and 1 are the seed itself.
pub fn aes_expand_keys(seed: &[u8]) -> Result<AesRoundKeys> {
    if seed.len() != 32 {
        return Err(Error::BadSeedLength(seed.len()));
    }
    let mut w = [0u32; 4 * AES_ROUNDS];
    for (i, chunk) in seed.chunks_exact(4).enumerate() {
        w[i] = u32::from_le_bytes(chunk.try_into().unwrap());
    }
    let mut rcon = 1u8;
    for i in 8..w.len() {
        let mut temp = w[i - 1];
        if i % 8 == 0 {
            temp = sub_word(temp.rotate_right(8)) ^ u32::from(rcon);
            rcon = xtime(rcon);
        } else if i % 8 == 4 {
            temp = sub_word(temp);
        }
        w[i] = w[i - 8] ^ temp;
    }

    let mut keys = [Block128::ZERO; AES_ROUNDS];
    for (key, words) in keys.iter_mut().zip(w.chunks_exact(4)) {
        for (j, word) in words.iter().enumerate() {
            key.0[4 * j..4 * j + 4].copy_from_slice(&word.to_le_bytes());
        }
    }
    Ok(AesRoundKeys { keys })
}

fn sub_word(w: u32) -> u32 {
    u32::from_le_bytes(w.to_le_bytes().map(|b| SBOX[b as usize]))
}

/// `x_i ^= x_{i+1}` for every block, with the last one wrapping to the
/// original first block.
#[inline]
pub(crate) fn mix_and_propagate(blocks: &mut [Block128; 8]) {
    let first = blocks[0];
    for i in 0..7 {
        blocks[i] ^= blocks[i + 1];
    }
    blocks[7] ^= first;
}

/// Ten keyed rounds applied to each of eight blocks.
#[inline]
pub(crate) fn rounds10_x8(blocks: &mut [Block128; 8], keys: &AesRoundKeys) {
    #[cfg(target_arch = "x86_64")]
    {
        if aesni::available() {
            // SAFETY: the CPU supports AES-NI, checked just above.
            unsafe { aesni::rounds10_x8(blocks, keys) };
            return;
        }
    }
    for key in keys.iter() {
        for b in blocks.iter_mut() {
            *b = aes_round(*b, *key);
        }
    }
}

/// Single round through the hardware instruction when present.
#[inline]
pub(crate) fn aes_round_fast(block: Block128, key: Block128) -> Block128 {
    #[cfg(target_arch = "x86_64")]
    {
        if aesni::available() {
            // SAFETY: AES-NI support checked above.
            return unsafe { aesni::round(block, key) };
        }
    }
    aes_round(block, key)
}

#[cfg(target_arch = "x86_64")]
mod aesni {
    use std::arch::x86_64::{__m128i, _mm_aesenc_si128, _mm_loadu_si128, _mm_storeu_si128};

    use super::{AesRoundKeys, Block128};

    #[inline]
    pub fn available() -> bool {
        std::is_x86_feature_detected!("aes")
    }

    #[inline]
    #[target_feature(enable = "aes,sse2")]
    pub unsafe fn round(block: Block128, key: Block128) -> Block128 {
        let b = _mm_loadu_si128(block.0.as_ptr() as *const __m128i);
        let k = _mm_loadu_si128(key.0.as_ptr() as *const __m128i);
        let mut out = Block128::ZERO;
        _mm_storeu_si128(out.0.as_mut_ptr() as *mut __m128i, _mm_aesenc_si128(b, k));
        out
    }

    #[target_feature(enable = "aes,sse2")]
    pub unsafe fn rounds10_x8(blocks: &mut [Block128; 8], keys: &AesRoundKeys) {
        let mut x: [__m128i; 8] =
            std::array::from_fn(|i| _mm_loadu_si128(blocks[i].0.as_ptr() as *const __m128i));
        for key in keys.iter() {
            let k = _mm_loadu_si128(key.0.as_ptr() as *const __m128i);
            for xi in x.iter_mut() {
                *xi = _mm_aesenc_si128(*xi, k);
            }
        }
        for (b, xi) in blocks.iter_mut().zip(x.iter()) {
            _mm_storeu_si128(b.0.as_mut_ptr() as *mut __m128i, *xi);
        }
    }
}
