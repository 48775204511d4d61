//! Bit-exact building blocks shared by every stage of the hash.

mod aes;
mod finalize;
mod keccak;

pub use self::aes::{aes_expand_keys, aes_round, AesRoundKeys, Block128, AES_ROUNDS};
pub use self::finalize::{hash_final, FinalHashFamily};
pub use self::keccak::{
    absorb, keccak_absorb, keccak_f1600, permute, KeccakState, KECCAK_RATE, STATE_BYTES,
};

pub(crate) use self::aes::{aes_round_fast, mix_and_propagate, rounds10_x8};
