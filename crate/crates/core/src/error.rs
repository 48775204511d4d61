use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input too short: {len} bytes, need at least {min}")]
    InputTooShort { len: usize, min: usize },

    #[error("nonce offset {offset} does not leave room for 4 nonce bytes in a {len}-byte blob")]
    BadNonceOffset { offset: usize, len: usize },

    #[error("AES key seed must be 32 bytes, got {0}")]
    BadSeedLength(usize),

    #[error("scratchpad offset {0:#x} is not 16-byte aligned")]
    Misaligned(u64),

    #[error("scratchpad offset {0:#x} is out of bounds")]
    OutOfBounds(u64),

    #[error("hash id {hash_id} is not below pipeline depth {depth}")]
    BadHashId { hash_id: u32, depth: u32 },

    #[error("invalid pipeline configuration: {0}")]
    ConfigInvalid(String),

    #[error("simulation deadlocked at tick {tick} with {remaining} hashes unfinished: {detail}")]
    Deadlock {
        tick: u64,
        remaining: u64,
        detail: String,
    },

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("malformed corpus: {0}")]
    MalformedCorpus(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
