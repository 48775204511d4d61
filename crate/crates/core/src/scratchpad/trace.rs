use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const TRACE_MAGIC: [u8; 4] = *b"CNHT";
pub const TRACE_VERSION: u16 = 1;

const HEADER_BYTES: usize = 4 + 2 + 8;
const RECORD_BYTES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessOp {
    Read = 0,
    Write = 1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Explode = 0,
    Shuffle = 1,
    Implode = 2,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Explode, Stage::Shuffle, Stage::Implode];
}

impl AccessOp {
    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(AccessOp::Read),
            1 => Some(AccessOp::Write),
            _ => None,
        }
    }
}

impl Stage {
    fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

/// One scratchpad access.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRecord {
    pub op: AccessOp,
    pub stage: Stage,
    pub hash_id: u16,
    pub seq: u64,
    pub offset: u32,
}

impl AccessRecord {
    fn to_bytes(self) -> [u8; RECORD_BYTES] {
        let mut b = [0u8; RECORD_BYTES];
        b[0] = self.op as u8;
        b[1] = self.stage as u8;
        b[2..4].copy_from_slice(&self.hash_id.to_le_bytes());
        b[4..12].copy_from_slice(&self.seq.to_le_bytes());
        b[12..16].copy_from_slice(&self.offset.to_le_bytes());
        b
    }

    fn from_bytes(b: &[u8; RECORD_BYTES]) -> Result<Self> {
        let op = AccessOp::from_code(b[0])
            .ok_or_else(|| Error::MalformedTrace(format!("bad op code {}", b[0])))?;
        let stage = Stage::from_code(b[1])
            .ok_or_else(|| Error::MalformedTrace(format!("bad stage code {}", b[1])))?;
        Ok(Self {
            op,
            stage,
            hash_id: u16::from_le_bytes([b[2], b[3]]),
            seq: u64::from_le_bytes(b[4..12].try_into().unwrap()),
            offset: u32::from_le_bytes(b[12..16].try_into().unwrap()),
        })
    }
}

/// Where a trace came from. Not part of either file format.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub input_digest_hex: Option<String>,
    pub nonce: Option<u32>,
    pub config_id: Option<String>,
}

/// An ordered list of access records.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessTrace {
    pub records: Vec<AccessRecord>,
    pub meta: TraceMeta,
}

impl AccessTrace {
    pub fn new(records: Vec<AccessRecord>) -> Self {
        Self {
            records,
            meta: TraceMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of one stage, in order.
    pub fn stage(&self, stage: super::Stage) -> AccessTrace {
        AccessTrace {
            records: self
                .records
                .iter()
                .copied()
                .filter(|r| r.stage == stage)
                .collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn count(&self, op: AccessOp, stage: Stage) -> usize {
        self.records
            .iter()
            .filter(|r| r.op == op && r.stage == stage)
            .count()
    }
}

/// Destination for access records as they are produced.
///
/// Sinks that do I/O remember the first error and report it from
/// [`finish`](TraceSink::finish).
pub trait TraceSink: Send {
    fn append(&mut self, rec: &AccessRecord);

    /// Flushes and returns the number of records written.
    fn finish(&mut self) -> io::Result<u64> {
        Ok(0)
    }
}

impl TraceSink for AccessTrace {
    fn append(&mut self, rec: &AccessRecord) {
        self.records.push(*rec);
    }

    fn finish(&mut self) -> io::Result<u64> {
        Ok(self.records.len() as u64)
    }
}

/// A sink shared by several scratchpads, possibly on different threads.
/// Records from different pads interleave in arrival order.
pub struct SharedSink<S: TraceSink>(pub Arc<Mutex<S>>);

impl<S: TraceSink> SharedSink<S> {
    pub fn new(sink: S) -> Self {
        Self(Arc::new(Mutex::new(sink)))
    }
}

impl<S: TraceSink> Clone for SharedSink<S> {
    fn clone(&self) -> Self {
        Self(Arc::clone(&self.0))
    }
}

impl<S: TraceSink> TraceSink for SharedSink<S> {
    fn append(&mut self, rec: &AccessRecord) {
        self.0.lock().unwrap().append(rec);
    }

    fn finish(&mut self) -> io::Result<u64> {
        self.0.lock().unwrap().finish()
    }
}

/// Streams records in the binary format. The header's record count is
/// patched in by [`finish`](TraceSink::finish).
pub struct BinaryTraceWriter<W: Write + Seek + Send> {
    out: W,
    count: u64,
    error: Option<io::Error>,
}

impl<W: Write + Seek + Send> BinaryTraceWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        write_header(&mut out, 0)?;
        Ok(Self {
            out,
            count: 0,
            error: None,
        })
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl BinaryTraceWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write + Seek + Send> TraceSink for BinaryTraceWriter<W> {
    fn append(&mut self, rec: &AccessRecord) {
        if self.error.is_some() {
            return;
        }
        match self.out.write_all(&rec.to_bytes()) {
            Ok(()) => self.count += 1,
            Err(e) => self.error = Some(e),
        }
    }

    fn finish(&mut self) -> io::Result<u64> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        let end = self.out.stream_position()?;
        self.out.seek(SeekFrom::Start(6))?;
        self.out.write_all(&self.count.to_le_bytes())?;
        self.out.seek(SeekFrom::Start(end))?;
        self.out.flush()?;
        Ok(self.count)
    }
}

/// Streams records as JSON lines.
pub struct JsonLinesWriter<W: Write + Send> {
    out: W,
    count: u64,
    error: Option<io::Error>,
}

impl<W: Write + Send> JsonLinesWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            count: 0,
            error: None,
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write + Send> TraceSink for JsonLinesWriter<W> {
    fn append(&mut self, rec: &AccessRecord) {
        if self.error.is_some() {
            return;
        }
        let res = serde_json::to_writer(&mut self.out, rec)
            .map_err(io::Error::from)
            .and_then(|_| self.out.write_all(b"\n"));
        match res {
            Ok(()) => self.count += 1,
            Err(e) => self.error = Some(e),
        }
    }

    fn finish(&mut self) -> io::Result<u64> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.count)
    }
}

fn write_header(out: &mut impl Write, count: u64) -> io::Result<()> {
    out.write_all(&TRACE_MAGIC)?;
    out.write_all(&TRACE_VERSION.to_le_bytes())?;
    out.write_all(&count.to_le_bytes())
}

/// Writes a whole trace in the binary format.
pub fn write_binary(trace: &AccessTrace, mut out: impl Write) -> io::Result<()> {
    write_header(&mut out, trace.records.len() as u64)?;
    for rec in &trace.records {
        out.write_all(&rec.to_bytes())?;
    }
    out.flush()
}

/// Reads a binary trace, checking magic, version and record count.
pub fn read_binary(mut input: impl Read) -> Result<AccessTrace> {
    let mut header = [0u8; HEADER_BYTES];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::MalformedTrace("truncated header".into()))?;
    if header[..4] != TRACE_MAGIC {
        return Err(Error::MalformedTrace("bad magic".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != TRACE_VERSION {
        return Err(Error::MalformedTrace(format!(
            "unsupported version {version}"
        )));
    }
    let count = u64::from_le_bytes(header[6..14].try_into().unwrap());

    let mut records = Vec::new();
    let mut buf = [0u8; RECORD_BYTES];
    for i in 0..count {
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::MalformedTrace(format!("truncated at record {i} of {count}")))?;
        records.push(AccessRecord::from_bytes(&buf)?);
    }
    if input.read(&mut buf)? != 0 {
        return Err(Error::MalformedTrace(format!(
            "trailing bytes after {count} records"
        )));
    }
    Ok(AccessTrace::new(records))
}

/// Writes a whole trace as JSON lines.
pub fn write_jsonl(trace: &AccessTrace, mut out: impl Write) -> io::Result<()> {
    for rec in &trace.records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads a JSON-lines trace; blank lines are skipped.
pub fn read_jsonl(input: impl BufRead) -> Result<AccessTrace> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedTrace(format!("line {}: {e}", i + 1)))?;
        records.push(rec);
    }
    Ok(AccessTrace::new(records))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Binary,
    Jsonl,
}

/// Opens a trace file, telling the formats apart by the magic bytes.
pub fn read_trace_file(path: impl AsRef<Path>) -> Result<AccessTrace> {
    let mut reader = BufReader::new(File::open(path)?);
    let is_binary = reader.fill_buf()?.starts_with(&TRACE_MAGIC);
    if is_binary {
        read_binary(reader)
    } else {
        read_jsonl(reader)
    }
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use super::*;

    fn sample() -> AccessTrace {
        AccessTrace::new(vec![
            AccessRecord {
                op: AccessOp::Write,
                stage: Stage::Explode,
                hash_id: 3,
                seq: 0,
                offset: 0,
            },
            AccessRecord {
                op: AccessOp::Read,
                stage: Stage::Shuffle,
                hash_id: 3,
                seq: 1,
                offset: 0x3ffff0,
            },
        ])
    }

    #[test]
    fn binary_layout() {
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_BYTES + 2 * RECORD_BYTES);
        assert_eq!(&buf[..4], b"CNHT");
        assert_eq!(&buf[4..6], &[1, 0]);
        assert_eq!(&buf[6..14], &2u64.to_le_bytes());
        // second record: op=0 stage=1 hash_id=3 seq=1 offset=0x3ffff0
        assert_eq!(
            &buf[30..46],
            &[0, 1, 3, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0xf0, 0xff, 0x3f, 0]
        );
        assert_eq!(read_binary(Cursor::new(buf)).unwrap(), sample());
    }

    #[test]
    fn streaming_writer_patches_count() {
        let mut w = BinaryTraceWriter::new(Cursor::new(Vec::new())).unwrap();
        for r in &sample().records {
            w.append(r);
        }
        assert_eq!(w.finish().unwrap(), 2);
        let bytes = w.into_inner().into_inner();
        let mut direct = Vec::new();
        write_binary(&sample(), &mut direct).unwrap();
        assert_eq!(bytes, direct);
    }

    #[test]
    fn jsonl_fields() {
        let mut buf = Vec::new();
        write_jsonl(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            r#"{"op":"write","stage":"explode","hash_id":3,"seq":0,"offset":0}"#
        );
        assert_eq!(read_jsonl(Cursor::new(buf)).unwrap(), sample());
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            read_binary(Cursor::new(b"XXXX".to_vec())),
            Err(Error::MalformedTrace(_))
        ));
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_binary(Cursor::new(buf)),
            Err(Error::MalformedTrace(_))
        ));
        let mut bad_op = Vec::new();
        write_binary(&sample(), &mut bad_op).unwrap();
        bad_op[HEADER_BYTES] = 9;
        assert!(matches!(
            read_binary(Cursor::new(bad_op)),
            Err(Error::MalformedTrace(_))
        ));
        assert!(matches!(
            read_jsonl(Cursor::new(b"{\"op\":1}\n".to_vec())),
            Err(Error::MalformedTrace(_))
        ));
    }

    #[test]
    fn shared_sink_collects_from_clones() {
        let shared = SharedSink::new(AccessTrace::default());
        let mut a = shared.clone();
        let mut b = shared.clone();
        let recs = sample().records;
        std::thread::scope(|s| {
            s.spawn(|| a.append(&recs[0]));
            s.spawn(|| b.append(&recs[1]));
        });
        assert_eq!(shared.0.lock().unwrap().len(), 2);
    }
}
