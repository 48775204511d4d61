//! Golden-vector corpus: JSON lines of inputs, digests and intermediate
//! states.

use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hash::{HashJob, Hasher};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCheckpoints {
    pub absorb_hex: String,
    pub explode_head_hex: String,
    pub shuffle_head_hex: String,
    pub implode_state_hex: String,
}

/// One corpus line. `blob_hex` is the template; `nonce` is written at
/// `nonce_offset` before hashing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub blob_hex: String,
    pub nonce: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonce_offset: Option<usize>,
    pub digest_hex: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<CorpusCheckpoints>,
}

impl CorpusEntry {
    pub fn job(&self) -> Result<HashJob> {
        let blob = hex::decode(&self.blob_hex)
            .map_err(|e| Error::MalformedCorpus(format!("blob_hex: {e}")))?;
        let job = HashJob::new(blob, self.nonce);
        Ok(match self.nonce_offset {
            Some(off) => job.with_nonce_offset(off),
            None => job,
        })
    }
}

/// Parses a corpus, skipping blank lines.
pub fn read_corpus(input: impl BufRead) -> Result<Vec<CorpusEntry>> {
    let mut entries = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CorpusEntry = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedCorpus(format!("line {}: {e}", i + 1)))?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Outcome for one entry. `mismatches` names the fields that differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryResult {
    pub index: usize,
    pub pass: bool,
    pub mismatches: Vec<String>,
    pub digest_hex: Option<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub entries: usize,
    pub passed: usize,
    pub failed: usize,
    pub results: Vec<EntryResult>,
}

impl VerifySummary {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

/// Recomputes one entry, comparing the digest and any checkpoints.
pub fn verify_entry(index: usize, entry: &CorpusEntry, hasher: &mut Hasher) -> EntryResult {
    let fail = |error: String| EntryResult {
        index,
        pass: false,
        mismatches: Vec::new(),
        digest_hex: None,
        error: Some(error),
    };
    let input = match entry.job().and_then(|j| j.input()) {
        Ok(input) => input,
        Err(e) => return fail(e.to_string()),
    };
    let cp = match hasher.hash_with_checkpoints(&input) {
        Ok(cp) => cp,
        Err(e) => return fail(e.to_string()),
    };
    let digest_hex = hex::encode(cp.digest);
    let mut mismatches = Vec::new();
    if !digest_hex.eq_ignore_ascii_case(&entry.digest_hex) {
        mismatches.push("digest".to_string());
    }
    if let Some(want) = &entry.checkpoints {
        let pairs = [
            (
                "absorb",
                &want.absorb_hex,
                hex::encode(cp.absorb.to_bytes()),
            ),
            (
                "explode_head",
                &want.explode_head_hex,
                hex::encode(&cp.explode_head),
            ),
            (
                "shuffle_head",
                &want.shuffle_head_hex,
                hex::encode(&cp.shuffle_head),
            ),
            (
                "implode_state",
                &want.implode_state_hex,
                hex::encode(cp.implode_state.to_bytes()),
            ),
        ];
        for (name, want, got) in pairs {
            if !want.eq_ignore_ascii_case(&got) {
                mismatches.push(name.to_string());
            }
        }
    }
    EntryResult {
        index,
        pass: mismatches.is_empty(),
        mismatches,
        digest_hex: Some(digest_hex),
        error: None,
    }
}

/// Verifies every entry, in parallel, reporting results in corpus order.
pub fn verify_corpus(entries: &[CorpusEntry]) -> VerifySummary {
    let results: Vec<EntryResult> = entries
        .par_iter()
        .enumerate()
        .map_init(Hasher::new, |h, (i, e)| verify_entry(i, e, h))
        .collect();
    let passed = results.iter().filter(|r| r.pass).count();
    VerifySummary {
        entries: entries.len(),
        passed,
        failed: entries.len() - passed,
        results,
    }
}
