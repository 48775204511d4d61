//! CryptoNight-Haven proof-of-work hashing and a model of a pipelined,
//! HBM-backed multi-hash accelerator for it.
//!
//! The crate is organized along the hash dataflow:
//!
//! * [`primitives`]: Keccak-f\[1600\] and the CryptoNight absorb, single AES
//!   rounds and key expansion, and the four 256-bit finalization hashes.
//! * [`scratchpad`]: the 4 MiB per-hash working memory, pluggable backends,
//!   access tracing and the trace file formats.
//! * [`hash`]: Explode, Shuffle and Implode, composed into [`cn_haven_hash`].
//! * [`sim`]: a discrete-event model of the FIFO-connected accelerator
//!   pipeline with dual clock domains and jittered memory latency.
//! * [`analysis`]: statistics over captured access traces.
//! * [`mining`]: share targets and a multithreaded nonce search.
//! * [`corpus`]: the golden-vector corpus format and verifier.

pub mod analysis;
pub mod corpus;
mod error;
pub mod hash;
pub mod mining;
pub mod primitives;
pub mod scratchpad;
pub mod sim;

pub use error::{Error, Result};
pub use hash::{cn_haven_hash, AlgoConstants, Checkpoints, HashJob, Hasher, HAVEN};
pub use primitives::{
    aes_expand_keys, aes_round, hash_final, keccak_absorb, keccak_f1600, AesRoundKeys, Block128,
    FinalHashFamily, KeccakState,
};
pub use scratchpad::{
    region_base, AccessOp, AccessRecord, AccessTrace, MemoryBackend, Scratchpad, Stage,
    SCRATCHPAD_BYTES,
};
pub use sim::{simulate, sweep, theoretical_bounds, PipelineConfig, SimReport};
