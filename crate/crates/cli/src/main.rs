//! `curvelab` command-line front end.

mod cache;
mod commands;
mod config;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use curvelab::CurveletError;
use serde_json::json;

use crate::cache::{cache_key, sha256_hex, Cache, Entry, Lookup};
use crate::commands::Produced;
use crate::config::{Config, ConfigArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config values, indices or input files.
    Input(String),
    /// A result could not be computed to the requested accuracy.
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<CurveletError> for CliError {
    fn from(e: CurveletError) -> Self {
        match e {
            CurveletError::QuadratureBudget { .. }
            | CurveletError::InsufficientResolution { .. }
            | CurveletError::TooFewEntries { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "curvelab", version, about = "Minkowski and Klein-Gordon curvelet frames")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Enumerate frame indices for the configured ranges.
    Tiles {
        #[arg(long, default_value = "tiles.json")]
        out: PathBuf,
    },
    /// Evaluate one curvelet in space-time at the points of a CSV file.
    Eval {
        /// Index literal, e.g. `case=wave,d=1,m=0,j=2,e=+,s=tp,k=0,0`.
        #[arg(long)]
        index: String,
        /// CSV with columns x0,x1 (d = 1) or x0..x3 (d = 3).
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value = "eval.csv")]
        out: PathBuf,
    },
    /// Parseval check over the configured windows (d = 1).
    FrameCheck {
        /// Frame element used as a test function; repeatable.
        #[arg(long = "index")]
        indices: Vec<String>,
        /// Number of random bump test functions drawn with the seed.
        #[arg(long, default_value_t = 0)]
        bumps: usize,
        /// Minimal FFT grid per axis for the lattice sums.
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value = "frame_check.json")]
        out: PathBuf,
    },
    /// Inner products for a list of index pairs.
    Gram {
        /// CSV with the index columns of both members of each pair.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value = "gram.csv")]
        out: PathBuf,
    },
    /// Green kernel entries of an anchor against lattice translates.
    Green {
        #[arg(long)]
        anchor: String,
        /// Fourier window of the translates, as an index literal (its `k` is
        /// ignored). Defaults to the anchor's window.
        #[arg(long)]
        target: Option<String>,
        /// `lo..hi` for every axis, or one range per axis separated by commas.
        #[arg(long, allow_hyphen_values = true)]
        offsets: String,
        #[arg(long, default_value = "green.csv")]
        out: PathBuf,
    },
    /// Power-law decay fit of a gram or green CSV.
    DecayReport {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "decay_report.json")]
        out: PathBuf,
    },
    /// Summability sums of the scaled distance over the configured index set.
    SumCheck {
        /// Repeatable.
        #[arg(long = "anchor")]
        anchors: Vec<String>,
        /// Second index of a triple sum; given once per anchor.
        #[arg(long = "partner")]
        partners: Vec<String>,
        #[arg(long, default_value_t = 6.0)]
        r: f64,
        #[arg(long, default_value = "sum_check.json")]
        out: PathBuf,
    },
}

struct Input {
    flag: &'static str,
    path: PathBuf,
    bytes: Vec<u8>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Tiles { .. } => "tiles",
            Command::Eval { .. } => "eval",
            Command::FrameCheck { .. } => "frame-check",
            Command::Gram { .. } => "gram",
            Command::Green { .. } => "green",
            Command::DecayReport { .. } => "decay-report",
            Command::SumCheck { .. } => "sum-check",
        }
    }

    fn out(&self) -> &Path {
        match self {
            Command::Tiles { out }
            | Command::Eval { out, .. }
            | Command::FrameCheck { out, .. }
            | Command::Gram { out, .. }
            | Command::Green { out, .. }
            | Command::DecayReport { out, .. }
            | Command::SumCheck { out, .. } => out,
        }
    }

    fn read_inputs(&self) -> Result<Vec<Input>, CliError> {
        let one = |flag: &'static str, path: &Path| -> Result<Vec<Input>, CliError> {
            let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("--{flag} {}: {e}", path.display())))?;
            Ok(vec![Input { flag, path: path.to_path_buf(), bytes }])
        };
        match self {
            Command::Eval { points, .. } => one("points", points),
            Command::Gram { pairs, .. } => one("pairs", pairs),
            Command::DecayReport { input, .. } => one("input", input),
            _ => Ok(Vec::new()),
        }
    }

    /// Subcommand arguments other than `--out`. File arguments are replaced
    /// by the digest of their contents when `digests` is given.
    fn args(&self, digests: Option<&[Input]>) -> Vec<String> {
        let file = |flag: &str, path: &Path| -> String {
            match digests.and_then(|d| d.iter().find(|i| i.flag == flag)) {
                Some(i) => format!("sha256:{}", sha256_hex(&i.bytes)),
                None => path.display().to_string(),
            }
        };
        let mut a: Vec<String> = Vec::new();
        let mut push = |k: &str, v: String| {
            a.push(format!("--{k}"));
            a.push(v);
        };
        match self {
            Command::Tiles { .. } => {}
            Command::Eval { index, points, .. } => {
                push("index", index.clone());
                push("points", file("points", points));
            }
            Command::FrameCheck { indices, bumps, grid, .. } => {
                for i in indices {
                    push("index", i.clone());
                }
                push("bumps", bumps.to_string());
                push("grid", grid.to_string());
            }
            Command::Gram { pairs, .. } => push("pairs", file("pairs", pairs)),
            Command::Green { anchor, target, offsets, .. } => {
                push("anchor", anchor.clone());
                if let Some(t) = target {
                    push("target", t.clone());
                }
                push("offsets", offsets.clone());
            }
            Command::DecayReport { input, .. } => push("input", file("input", input)),
            Command::SumCheck { anchors, partners, r, .. } => {
                for s in anchors {
                    push("anchor", s.clone());
                }
                for s in partners {
                    push("partner", s.clone());
                }
                push("r", format!("{r:e}"));
            }
        }
        a
    }

    fn compute(&self, cfg: &Config, inputs: &[Input]) -> Result<Produced, CliError> {
        let input = |i: usize| inputs[i].bytes.as_slice();
        match self {
            Command::Tiles { .. } => commands::tiles(cfg),
            Command::Eval { index, .. } => commands::eval(cfg, index, input(0)),
            Command::FrameCheck { indices, bumps, grid, .. } => commands::frame_check_cmd(cfg, indices, *bumps, *grid),
            Command::Gram { .. } => commands::gram(cfg, input(0)),
            Command::Green { anchor, target, offsets, .. } => commands::green(cfg, anchor, target.as_deref(), offsets),
            Command::DecayReport { .. } => commands::decay_report(input(0)),
            Command::SumCheck { anchors, partners, r, .. } => commands::sum_check(cfg, anchors, partners, *r),
        }
    }
}

/// Flags that reproduce a resolved configuration without a config file.
fn config_flags(cfg: &Config) -> Vec<String> {
    let sectors: Vec<&str> = cfg.sectors.iter().map(|s| s.code()).collect();
    let pairs = [
        ("case", cfg.case.name().to_string()),
        ("d", cfg.d.to_string()),
        ("mu", format!("{:e}", cfg.mu)),
        ("m", format!("{}..{}", cfg.m_range.lo, cfg.m_range.hi)),
        ("j", format!("{}..{}", cfg.j_range.lo, cfg.j_range.hi)),
        ("k", format!("{}..{}", cfg.k_box.lo, cfg.k_box.hi)),
        ("sectors", sectors.join(",")),
        ("base-order", cfg.base_order.to_string()),
        ("resolution-factor", format!("{:e}", cfg.resolution_factor)),
        ("max-nodes", cfg.max_nodes.to_string()),
        ("seed", cfg.seed.to_string()),
    ];
    pairs.into_iter().flat_map(|(k, v)| [format!("--{k}"), v]).collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let started = Instant::now();
    let cfg = Config::resolve(&cli.config)?;
    let cmd = &cli.command;
    let inputs = cmd.read_inputs()?;
    let key = cache_key(&cfg.canonical(), cmd.name(), &cmd.args(Some(&inputs)));
    let cache = (!cli.config.no_cache).then(|| Cache::new(&cfg.cache_dir));

    let mut cache_state = "disabled";
    let mut cached = None;
    if let Some(c) = &cache {
        match c.get(&key) {
            Lookup::Hit(e) => {
                cache_state = "hit";
                cached = Some(e);
            }
            Lookup::Miss => cache_state = "miss",
            Lookup::Broken(why) => {
                eprintln!("warning: cache entry unusable ({why}); recomputing");
                cache_state = "recomputed";
            }
        }
    }
    let entry = match cached {
        Some(e) => e,
        None => {
            let p = cmd.compute(&cfg, &inputs)?;
            let e = Entry { payload: p.bytes, flags: p.flags };
            if let Some(c) = &cache {
                if let Err(err) = c.put(&key, &e) {
                    eprintln!("warning: cannot write cache entry: {err}");
                }
            }
            e
        }
    };
    write_atomic(cmd.out(), &entry.payload)?;

    let mut replay = config_flags(&cfg);
    replay.push(cmd.name().to_string());
    replay.extend(cmd.args(None));
    replay.extend(["--out".to_string(), cmd.out().display().to_string()]);
    let manifest = json!({
        "tool": "curvelab",
        "versions": {
            "curvelab-cli": env!("CARGO_PKG_VERSION"),
            "curvelab-core": curvelab::VERSION,
        },
        "subcommand": cmd.name(),
        "config": cfg.echo(),
        "replay": replay,
        "inputs": inputs.iter().map(|i| json!({
            "flag": i.flag,
            "path": i.path.display().to_string(),
            "sha256": sha256_hex(&i.bytes),
            "content": String::from_utf8_lossy(&i.bytes),
        })).collect::<Vec<_>>(),
        "outputs": [{
            "path": cmd.out().display().to_string(),
            "sha256": sha256_hex(&entry.payload),
            "bytes": entry.payload.len(),
        }],
        "flagged": entry.flags,
        "cache": { "key": key, "state": cache_state },
        "timings": { "wall_seconds": started.elapsed().as_secs_f64() },
    });
    println!("{}", serde_json::to_string_pretty(&manifest).expect("serializable"));
    if entry.flags > 0 {
        eprintln!("error: {} result(s) flagged as not converged", entry.flags);
        return Ok(3);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
