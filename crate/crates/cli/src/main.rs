use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use cnhaven_core::analysis::{partition_check, trace_stats};
use cnhaven_core::corpus::{read_corpus, verify_corpus};
use cnhaven_core::mining::{mine, JobFile, TargetRule};
use cnhaven_core::scratchpad::{read_trace_file, write_binary, write_jsonl, AccessTrace};
use cnhaven_core::sim::{
    depth_grid, simulate, simulate_trace, sweep, write_sweep_csv, PipelineConfig, SimReport,
};
use cnhaven_core::{Error, HashJob, Hasher};

const EXIT_MISMATCH: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NO_SHARE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cnhaven",
    version,
    about = "CryptoNight-Haven hashing, mining and pipeline simulation"
)]
struct Cli {
    /// Print results and errors as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads.
    #[arg(long, global = true, env = "CNHAVEN_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Hash one blob with a nonce patched in.
    Hash {
        /// Block template, hex.
        blob_hex: String,
        #[arg(long, default_value_t = 0)]
        nonce: u32,
        #[arg(long, default_value_t = 39)]
        nonce_offset: usize,
        /// Write the scratchpad access trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        trace_format: Format,
    },
    /// Search a nonce range for a share.
    Mine {
        /// Job JSON file, or - for stdin.
        job: PathBuf,
        /// Compare the whole 256-bit digest against the difficulty.
        #[arg(long)]
        strict_target: bool,
    },
    /// Recompute every entry of a golden corpus.
    Verify { corpus: PathBuf },
    /// Run the pipeline model.
    Simulate {
        /// PipelineConfig JSON; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        hashes: u64,
        #[arg(long)]
        depth: Option<u32>,
        /// Memory-latency seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replay the work shape and addresses of a single-hash trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run the pipeline model over a grid of configurations.
    Sweep {
        /// JSON array of PipelineConfig, or one config combined with --depths.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated pipeline depths applied to the base config.
        #[arg(long, value_delimiter = ',')]
        depths: Vec<u32>,
        #[arg(long, default_value_t = 64)]
        hashes: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write one CSV row per configuration here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Statistics and partition check over trace files.
    Analyze {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// PipelineConfig JSON used for the partition check.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        depth: Option<u32>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Binary,
    Jsonl,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            kind: "input",
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::InputTooShort { .. } => (EXIT_INPUT, "input_too_short"),
            Error::BadNonceOffset { .. } => (EXIT_INPUT, "bad_nonce_offset"),
            Error::ConfigInvalid(_) => (EXIT_INPUT, "config_invalid"),
            Error::MalformedTrace(_) => (EXIT_INPUT, "malformed_trace"),
            Error::MalformedCorpus(_) => (EXIT_INPUT, "malformed_corpus"),
            Error::Json(_) => (EXIT_INPUT, "json"),
            Error::Io(_) => (EXIT_INPUT, "io"),
            Error::Deadlock { .. } => (EXIT_MISMATCH, "deadlock"),
            _ => (EXIT_INPUT, "error"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

/// What a command printed and how it should exit.
struct Outcome {
    code: u8,
    json: serde_json::Value,
    text: String,
}

impl Outcome {
    fn ok(json: serde_json::Value, text: impl Into<String>) -> Self {
        Self {
            code: 0,
            json,
            text: text.into(),
        }
    }
}

type CmdResult = Result<Outcome, Failure>;

fn main() -> ExitCode {
    let json_flag = std::env::args().any(|a| a == "--json");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_failure(
                &Failure {
                    code: EXIT_INPUT,
                    kind: "usage",
                    message: e.to_string(),
                },
                json_flag,
            );
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let threads = cli
        .threads
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();

    let res = match cli.cmd {
        Cmd::Hash {
            blob_hex,
            nonce,
            nonce_offset,
            trace,
            trace_format,
        } => cmd_hash(
            &blob_hex,
            nonce,
            nonce_offset,
            trace.as_deref(),
            trace_format,
        ),
        Cmd::Mine { job, strict_target } => cmd_mine(&job, threads, strict_target),
        Cmd::Verify { corpus } => cmd_verify(&corpus, cli.json),
        Cmd::Simulate {
            config,
            hashes,
            depth,
            seed,
            trace,
        } => cmd_simulate(config.as_deref(), hashes, depth, seed, trace.as_deref()),
        Cmd::Sweep {
            config,
            depths,
            hashes,
            seed,
            csv,
        } => cmd_sweep(config.as_deref(), &depths, hashes, seed, csv.as_deref()),
        Cmd::Analyze {
            traces,
            config,
            depth,
        } => cmd_analyze(&traces, config.as_deref(), depth),
    };
    match res {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            let _ = if cli.json {
                writeln!(
                    stdout,
                    "{}",
                    serde_json::to_string_pretty(&out.json).unwrap()
                )
            } else {
                write!(stdout, "{}", out.text)
            };
            ExitCode::from(out.code)
        }
        Err(f) => {
            report_failure(&f, cli.json);
            ExitCode::from(f.code)
        }
    }
}

fn report_failure(f: &Failure, json: bool) {
    if json {
        let v = json!({"error": {"kind": f.kind, "message": f.message, "exit_code": f.code}});
        println!("{v}");
    } else {
        eprintln!("error: {}", f.message.trim_end());
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    let mut text = String::new();
    let res = if path == Path::new("-") {
        io::stdin().read_to_string(&mut text)
    } else {
        File::open(path).and_then(|mut f| f.read_to_string(&mut text))
    };
    res.map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(text)
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn cmd_hash(
    blob_hex: &str,
    nonce: u32,
    nonce_offset: usize,
    trace_path: Option<&Path>,
    format: Format,
) -> CmdResult {
    let blob = hex::decode(blob_hex.trim())
        .map_err(|e| Failure::input(format!("blob is not valid hex: {e}")))?;
    let job = HashJob::new(blob, nonce).with_nonce_offset(nonce_offset);
    let input = job.input()?;
    let mut hasher = Hasher::new();
    let digest = match trace_path {
        None => hasher.hash(&input)?,
        Some(path) => {
            let (digest, mut trace) = hasher.hash_traced(&input)?;
            trace.meta.nonce = Some(nonce);
            write_trace(&trace, path, format)?;
            digest
        }
    };
    let digest_hex = hex::encode(digest);
    Ok(Outcome::ok(
        json!({"digest_hex": digest_hex, "nonce": nonce, "nonce_offset": nonce_offset}),
        format!("{digest_hex}\n"),
    ))
}

fn write_trace(trace: &AccessTrace, path: &Path, format: Format) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure::input(format!("{}: {e}", path.display()));
    let mut out = io::BufWriter::new(File::create(path).map_err(io_err)?);
    match format {
        Format::Binary => write_binary(trace, &mut out),
        Format::Jsonl => write_jsonl(trace, &mut out),
    }
    .and_then(|()| out.flush())
    .map_err(io_err)
}

fn cmd_mine(path: &Path, threads: usize, strict: bool) -> CmdResult {
    let job = JobFile::parse(&read_input(path)?)?;
    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = Arc::clone(&stop);
        let _ = ctrlc::set_handler(move || stop.store(true, Ordering::Relaxed));
    }
    let rule = if strict {
        TargetRule::Strict
    } else {
        TargetRule::Pool
    };
    let r = mine(&job, threads, rule, &stop)?;
    let text = match (r.nonce, &r.digest_hex) {
        (Some(n), Some(d)) => format!(
            "share nonce {n} digest {d}\n{} hashes in {:.3} s ({:.2} H/s)\n",
            r.hashes_tried, r.elapsed_s, r.hash_rate
        ),
        _ => format!(
            "no share{}\n{} hashes in {:.3} s ({:.2} H/s)\n",
            if r.interrupted { " (interrupted)" } else { "" },
            r.hashes_tried,
            r.elapsed_s,
            r.hash_rate
        ),
    };
    Ok(Outcome {
        code: if r.meets_target { 0 } else { EXIT_NO_SHARE },
        json: to_json(&r),
        text,
    })
}

fn cmd_verify(path: &Path, json: bool) -> CmdResult {
    let file = File::open(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let entries = read_corpus(BufReader::new(file))?;
    if entries.is_empty() && !json {
        eprintln!("warning: 0 entries in {}", path.display());
    }
    let s = verify_corpus(&entries);
    let mut text = String::new();
    for r in &s.results {
        if r.pass {
            text += &format!("entry {}: pass\n", r.index);
        } else if let Some(e) = &r.error {
            text += &format!("entry {}: FAIL ({e})\n", r.index);
        } else {
            text += &format!(
                "entry {}: FAIL ({} mismatch)\n",
                r.index,
                r.mismatches.join(", ")
            );
        }
    }
    text += &format!(
        "{} entries, {} passed, {} failed\n",
        s.entries, s.passed, s.failed
    );
    let mut v = to_json(&s);
    if entries.is_empty() {
        v["warning"] = json!("0 entries");
    }
    Ok(Outcome {
        code: if s.all_pass() { 0 } else { EXIT_MISMATCH },
        json: v,
        text,
    })
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => serde_json::from_str(&read_input(p)?)
            .map_err(|e| Failure::from(Error::ConfigInvalid(format!("{}: {e}", p.display())))),
    }
}

fn sim_summary(r: &SimReport) -> String {
    format!(
        "{} hashes in {:.6} s: {:.1} H/s ({:.1} H/s steady), bottleneck {}\n",
        r.hashes_completed,
        r.elapsed_s,
        r.hash_rate_hs,
        r.steady_hash_rate_hs,
        r.bottleneck.name()
    )
}

fn cmd_simulate(
    config: Option<&Path>,
    hashes: u64,
    depth: Option<u32>,
    seed: Option<u64>,
    trace: Option<&Path>,
) -> CmdResult {
    let mut cfg = load_config(config)?;
    if let Some(d) = depth {
        cfg.pipeline_depth = d;
    }
    if let Some(s) = seed {
        cfg.mem_latency_ticks.seed = s;
    }
    let report = match trace {
        None => simulate(&cfg, hashes)?,
        Some(p) => simulate_trace(&cfg, hashes, &read_trace_file(p)?)?,
    };
    Ok(Outcome::ok(to_json(&report), sim_summary(&report)))
}

fn cmd_sweep(
    config: Option<&Path>,
    depths: &[u32],
    hashes: u64,
    seed: Option<u64>,
    csv: Option<&Path>,
) -> CmdResult {
    let mut grid: Vec<PipelineConfig> = match config {
        None => vec![PipelineConfig::default()],
        Some(p) => {
            let text = read_input(p)?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
                Failure::from(Error::ConfigInvalid(format!("{}: {e}", p.display())))
            })?;
            let parsed = if value.is_array() {
                serde_json::from_value(value)
            } else {
                serde_json::from_value(value).map(|c| vec![c])
            };
            parsed
                .map_err(|e| Failure::from(Error::ConfigInvalid(format!("{}: {e}", p.display()))))?
        }
    };
    if !depths.is_empty() {
        if grid.len() != 1 {
            return Err(Failure::input("--depths needs a single base configuration"));
        }
        grid = depth_grid(&grid[0], depths);
    }
    if let Some(s) = seed {
        for c in &mut grid {
            c.mem_latency_ticks.seed = s;
        }
    }
    let results = sweep(&grid, hashes)?;
    if let Some(path) = csv {
        let file =
            File::create(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        write_sweep_csv(&grid, &results, io::BufWriter::new(file))?;
    }
    let mut text = String::new();
    let mut entries = Vec::new();
    for (cfg, res) in grid.iter().zip(&results) {
        match res {
            Ok(r) => {
                text += &format!("depth {:>3}: {}", cfg.pipeline_depth, sim_summary(r));
                entries.push(json!({"config": cfg, "report": r}));
            }
            Err(e) => {
                text += &format!("depth {:>3}: error: {e}\n", cfg.pipeline_depth);
                entries.push(json!({"config": cfg, "error": e.to_string()}));
            }
        }
    }
    let code = if results.iter().all(|r| r.is_ok()) {
        0
    } else {
        EXIT_MISMATCH
    };
    Ok(Outcome {
        code,
        json: serde_json::Value::Array(entries),
        text,
    })
}

fn cmd_analyze(paths: &[PathBuf], config: Option<&Path>, depth: Option<u32>) -> CmdResult {
    let mut cfg = load_config(config)?;
    let traces = paths
        .iter()
        .map(|p| read_trace_file(p).map_err(Failure::from))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(d) = depth {
        cfg.pipeline_depth = d;
    } else if config.is_none() {
        let max_id = traces
            .iter()
            .flat_map(|t| t.records.iter().map(|r| u32::from(r.hash_id)))
            .max()
            .unwrap_or(0);
        cfg.pipeline_depth = cfg.pipeline_depth.max(max_id + 1);
    }
    let mut stats = Vec::new();
    let mut text = String::new();
    for (p, t) in paths.iter().zip(&traces) {
        let s = trace_stats(t)?;
        text += &format!(
            "{}: {} accesses, entropy {:.3} bits, reuse p50/p90/p99 {}/{}/{}, median run {}\n",
            p.display(),
            s.total_accesses,
            s.address_entropy_bits,
            s.reuse_distance_quantiles.p50,
            s.reuse_distance_quantiles.p90,
            s.reuse_distance_quantiles.p99,
            s.run_length_quantile(0.5)
        );
        stats.push(json!({"path": p, "stats": s}));
    }
    let partition = partition_check(&traces, &cfg);
    text += &format!(
        "partition check: {} records, {} violations\n",
        partition.records_checked,
        partition.violations.len()
    );
    for v in &partition.violations {
        text += &format!(
            "  trace {} record {} seq {}: {:?} (hash_id {}, offset {:#x})\n",
            v.trace_index, v.record_index, v.seq, v.kind, v.hash_id, v.offset
        );
    }
    Ok(Outcome {
        code: if partition.is_clean() {
            0
        } else {
            EXIT_MISMATCH
        },
        json: json!({"traces": stats, "partition": partition}),
        text,
    })
}
