//! Share targets and a multithreaded nonce search.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::hash::{HashJob, Hasher, HAVEN};
use crate::{Error, Result};

/// How a digest is compared against the difficulty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRule {
    /// Last 8 digest bytes as a little-endian `u64`, below
    /// `floor(2^64 / difficulty)`.
    #[default]
    Pool,
    /// The whole digest as a little-endian 256-bit integer, with
    /// `value * difficulty < 2^256`.
    Strict,
}

/// Whether `digest` is a share at `difficulty`. Difficulty 0 accepts
/// nothing.
pub fn meets_target(digest: &[u8; 32], difficulty: u64, rule: TargetRule) -> bool {
    if difficulty == 0 {
        return false;
    }
    match rule {
        TargetRule::Pool => {
            let tail = u64::from_le_bytes(digest[24..32].try_into().unwrap());
            u128::from(tail) < (1u128 << 64) / u128::from(difficulty)
        }
        TargetRule::Strict => {
            let mut carry = 0u128;
            for limb in digest.chunks_exact(8) {
                let v = u128::from(u64::from_le_bytes(limb.try_into().unwrap()));
                carry = (v * u128::from(difficulty) + carry) >> 64;
            }
            carry == 0
        }
    }
}

/// A mining job as read from a JSON file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    pub blob_hex: String,
    #[serde(default = "default_nonce_offset")]
    pub nonce_offset: usize,
    pub difficulty: u64,
    #[serde(default)]
    pub nonce_start: u32,
    /// Exclusive; at most 2^32 so the whole nonce space can be scanned.
    pub nonce_end: u64,
}

fn default_nonce_offset() -> usize {
    HAVEN.default_nonce_offset
}

/// A validated job.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MineJob {
    pub job: HashJob,
    pub difficulty: u64,
    pub nonce_start: u32,
    pub nonce_end: u64,
}

impl JobFile {
    pub fn parse(text: &str) -> Result<MineJob> {
        serde_json::from_str::<JobFile>(text)?.validate()
    }

    pub fn validate(&self) -> Result<MineJob> {
        let invalid = |m: String| Error::ConfigInvalid(format!("job: {m}"));
        let blob = hex::decode(self.blob_hex.trim())
            .map_err(|e| invalid(format!("blob_hex does not decode: {e}")))?;
        let job = HashJob::new(blob, self.nonce_start).with_nonce_offset(self.nonce_offset);
        job.validate()?;
        if self.difficulty == 0 {
            return Err(invalid("difficulty must be at least 1".into()));
        }
        if self.nonce_end > 1 << 32 || u64::from(self.nonce_start) >= self.nonce_end {
            return Err(invalid(format!(
                "nonce range [{}, {}) is empty or exceeds 2^32",
                self.nonce_start, self.nonce_end
            )));
        }
        Ok(MineJob {
            job,
            difficulty: self.difficulty,
            nonce_start: self.nonce_start,
            nonce_end: self.nonce_end,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShareResult {
    /// Lowest share nonce in the range, if any was found.
    pub nonce: Option<u32>,
    pub digest_hex: Option<String>,
    pub meets_target: bool,
    pub hashes_tried: u64,
    pub elapsed_s: f64,
    pub hash_rate: f64,
    /// The search stopped early on request.
    pub interrupted: bool,
}

const CHUNK: u64 = 4;

/// Scans `[nonce_start, nonce_end)` on `threads` workers and returns the
/// lowest share nonce. Chunks are claimed in increasing order and a worker
/// abandons any nonce above the best share so far, so the result does not
/// depend on the thread count. Setting `stop` ends the search early with
/// the statistics gathered so far.
pub fn mine(
    job: &MineJob,
    threads: usize,
    rule: TargetRule,
    stop: &AtomicBool,
) -> Result<ShareResult> {
    job.job.validate()?;
    let threads = threads.max(1);
    let next = AtomicU64::new(u64::from(job.nonce_start));
    let best = AtomicU64::new(u64::MAX);
    let tried = AtomicU64::new(0);
    let start = Instant::now();

    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| {
                let mut hasher = Hasher::new();
                let mut buf = job.job.blob.clone();
                loop {
                    let chunk = next.fetch_add(CHUNK, Ordering::Relaxed);
                    if chunk >= job.nonce_end || chunk >= best.load(Ordering::Acquire) {
                        return;
                    }
                    for nonce in chunk..(chunk + CHUNK).min(job.nonce_end) {
                        if stop.load(Ordering::Relaxed) || nonce >= best.load(Ordering::Acquire) {
                            return;
                        }
                        job.job
                            .patch_into(&mut buf, nonce as u32)
                            .expect("validated job");
                        let digest = hasher.hash(&buf).expect("validated input");
                        tried.fetch_add(1, Ordering::Relaxed);
                        if meets_target(&digest, job.difficulty, rule) {
                            best.fetch_min(nonce, Ordering::AcqRel);
                            return;
                        }
                    }
                }
            });
        }
    });

    let elapsed_s = start.elapsed().as_secs_f64();
    let hashes_tried = tried.into_inner();
    let found = best.into_inner();
    let (nonce, digest_hex) = if found == u64::MAX {
        (None, None)
    } else {
        let nonce = found as u32;
        let digest = Hasher::new().hash_job(&HashJob {
            nonce,
            ..job.job.clone()
        })?;
        (Some(nonce), Some(hex::encode(digest)))
    };
    Ok(ShareResult {
        meets_target: nonce.is_some(),
        nonce,
        digest_hex,
        hashes_tried,
        elapsed_s,
        hash_rate: if elapsed_s > 0.0 {
            hashes_tried as f64 / elapsed_s
        } else {
            0.0
        },
        interrupted: stop.load(Ordering::Relaxed),
    })
}
