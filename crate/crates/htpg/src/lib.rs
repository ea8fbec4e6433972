//! File-based pipeline around `htpg-core`:
//! `profile → generate → inject → detect`, plus `bench` campaigns and
//! `emit-hw` for the on-chip pattern generator.
//!
//! Every command takes its randomness from one `--seed` and writes a
//! `<output>.manifest.json` beside its primary output.

pub mod error;
pub mod formats;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use htpg_core::eval::{self, CampaignConfig, Clock, NoClock};
use htpg_core::hwgen::{self, Mode, Segment, TpgPlan};
use htpg_core::profile::{self, Profile};
use htpg_core::satinit;
use htpg_core::tpg::{self, AdaTestConfig, InitMode};
use htpg_core::trojan;
use serde::{Deserialize, Serialize};

pub use error::{CliError, Result};
use formats::*;
use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(
    name = "htpg",
    version,
    about = "Rare-node test generation for hardware Trojan detection"
)]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate signal probabilities, rare nodes and SCOAP values.
    Profile(ProfileArgs),
    /// Run the adaptive search and write a pattern file.
    Generate(GenerateArgs),
    /// Sample Trojans and write infected netlists.
    Inject(InjectArgs),
    /// Measure trigger and Trojan coverage of a pattern file.
    Detect(DetectArgs),
    /// Run a detection campaign described by a JSON file.
    Bench(BenchArgs),
    /// Map a pattern file onto a shift-register pattern generator.
    EmitHw(EmitHwArgs),
}

#[derive(clap::Args, Debug)]
pub struct ProfileArgs {
    pub bench: PathBuf,
    /// Rarity threshold (default 0.1, or 0.0005 with --unroll).
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = profile::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Unroll a sequential netlist over this many frames.
    #[arg(long)]
    pub unroll: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the circuit's CNF in DIMACS format.
    #[arg(long)]
    pub dimacs: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum InitArg {
    Sat,
    Random,
}

#[derive(clap::Args, Debug)]
pub struct GenerateArgs {
    pub bench: PathBuf,
    #[arg(long)]
    pub profile: PathBuf,
    /// JSON search configuration; missing keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub unroll: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Coverage trace CSV (default: `<out>.trace.csv`).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct InjectArgs {
    pub bench: PathBuf,
    #[arg(long)]
    pub profile: PathBuf,
    /// Trigger size.
    #[arg(long, default_value_t = 3)]
    pub q: usize,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub unroll: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct DetectArgs {
    pub bench: PathBuf,
    /// Directory written by `inject`.
    #[arg(long)]
    pub trojans: PathBuf,
    #[arg(long)]
    pub patterns: PathBuf,
    #[arg(long)]
    pub unroll: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Record wall-clock generation times (makes the reports non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum ModeArg {
    Distributed,
    Centralized,
}

#[derive(clap::Args, Debug)]
pub struct EmitHwArgs {
    pub patterns: PathBuf,
    /// Split the test set into segments of this many vectors.
    #[arg(long, conflicts_with_all = ["auto_chunk", "cluster"])]
    pub chunk: Option<usize>,
    /// Pick the segment size with the lowest modeled cost.
    #[arg(long, conflicts_with = "cluster")]
    pub auto_chunk: bool,
    /// Partition by independent input clusters of this netlist.
    #[arg(long)]
    pub cluster: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "distributed")]
    pub mode: ModeArg,
    /// Stage holding the 1 at start-up (unsegmented plans only).
    #[arg(long, default_value_t = 1)]
    pub init_position: usize,
    /// Golden netlist for the response ROM.
    #[arg(long)]
    pub golden: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    pub rom_width: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Parses arguments and runs the command on a pool of `--jobs` threads.
pub fn run(cli: Cli) -> Result<()> {
    if cli.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Profile(a) => cmd_profile(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Inject(a) => cmd_inject(&a),
        Command::Detect(a) => cmd_detect(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::EmitHw(a) => cmd_emit_hw(&a),
    })
}

fn timed<T>(m: &mut RunManifest, label: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    m.timings_seconds
        .insert(label.into(), t.elapsed().as_secs_f64());
    out
}

pub fn cmd_profile(a: &ProfileArgs) -> Result<()> {
    let mut m = RunManifest::new("profile");
    let netlist = load_netlist(&a.bench, a.unroll)?;
    m.input(&a.bench)?;
    let default_theta = if a.unroll.is_some() {
        profile::DEFAULT_THETA_SEQUENTIAL
    } else {
        profile::DEFAULT_THETA
    };
    let theta = a.theta.unwrap_or(default_theta);
    let p = timed(&mut m, "profile", || {
        Profile::compute(&netlist, theta, a.trials, a.seed)
    })?;
    write_text(
        &a.out,
        &profile_to_json(&circuit_name(&a.bench), &netlist, &p),
    )?;
    m.output(&a.out);
    if let Some(path) = &a.dimacs {
        write_text(path, &satinit::encode_cnf(&netlist)?.to_dimacs())?;
        m.output(path);
    }
    m.config = serde_json::json!({ "theta": theta, "trials": a.trials, "unroll": a.unroll });
    m.seeds.insert("seed".into(), a.seed);
    m.write_beside(&a.out)?;
    Ok(())
}

fn load_profile(path: &Path, netlist: &htpg_core::netlist::Netlist) -> Result<Profile> {
    profile_from_json(path, &read_text(path)?, netlist)
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let mut m = RunManifest::new("generate");
    let netlist = load_netlist(&a.bench, a.unroll)?;
    let profile = load_profile(&a.profile, &netlist)?;
    m.input(&a.bench)?;
    m.input(&a.profile)?;
    let mut cfg = match &a.config {
        Some(path) => {
            m.input(path)?;
            from_json::<AdaTestConfig>(path, &read_text(path)?)?
        }
        None => AdaTestConfig::default(),
    };
    if let Some(init) = a.init {
        cfg.init = match init {
            InitArg::Sat => InitMode::Sat,
            InitArg::Random => InitMode::Random,
        };
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| CliError::Config {
        path: a.config.clone().unwrap_or_else(|| "<defaults>".into()),
        msg: e.to_string(),
    })?;
    let run = timed(&mut m, "generate", || {
        tpg::run_adatest(&netlist, &profile, &cfg, None)
    })?;
    write_text(&a.out, &write_patterns(&run.test_set.vectors))?;
    let trace = a
        .trace
        .clone()
        .unwrap_or_else(|| with_suffix(&a.out, ".trace.csv"));
    write_text(&trace, &trace_csv(&run.trace))?;
    m.output(&a.out);
    m.output(&trace);
    m.config = serde_json::to_value(&cfg).expect("serializable config");
    m.seeds.insert("seed".into(), cfg.seed);
    m.write_beside(&a.out)?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

pub fn cmd_inject(a: &InjectArgs) -> Result<()> {
    let mut m = RunManifest::new("inject");
    let netlist = load_netlist(&a.bench, a.unroll)?;
    let profile = load_profile(&a.profile, &netlist)?;
    m.input(&a.bench)?;
    m.input(&a.profile)?;
    let specs = timed(&mut m, "sample", || {
        trojan::sample_trojans(&netlist, &profile, a.count, a.q, a.seed)
    })?;
    let mut docs = Vec::with_capacity(specs.len());
    for s in &specs {
        let infected = trojan::insert_trojan(&netlist, s)?;
        let path = a.out_dir.join(format!("{}.bench", s.id));
        write_text(&path, &infected.to_bench())?;
        m.output(&path);
        docs.push(trojan_doc(&netlist, s));
    }
    let list = a.out_dir.join("trojans.json");
    write_text(&list, &to_json(&docs))?;
    m.output(&list);
    m.config = serde_json::json!({ "q": a.q, "count": a.count, "unroll": a.unroll });
    m.seeds.insert("seed".into(), a.seed);
    m.write_beside(&list)?;
    Ok(())
}

#[derive(Serialize)]
struct DetectOutcome {
    trojan: String,
    trigger_fraction: f64,
    fully_triggered: bool,
    detected: bool,
}

#[derive(Serialize)]
struct DetectReport {
    circuit: String,
    test_vector_count: usize,
    trigger_coverage_pct: f64,
    trojan_coverage_pct: f64,
    full_trigger_pct: f64,
    outcomes: Vec<DetectOutcome>,
}

pub fn cmd_detect(a: &DetectArgs) -> Result<()> {
    let mut m = RunManifest::new("detect");
    let netlist = load_netlist(&a.bench, a.unroll)?;
    let list = a.trojans.join("trojans.json");
    let docs: Vec<TrojanDoc> = from_json(&list, &read_text(&list)?)?;
    let specs = docs
        .iter()
        .map(|d| trojan_from_doc(&list, &netlist, d))
        .collect::<Result<Vec<_>>>()?;
    if specs.is_empty() {
        return Err(CliError::data(&list, "no trojans listed"));
    }
    let vectors = read_patterns(
        &a.patterns,
        &read_text(&a.patterns)?,
        Some(netlist.inputs().len()),
    )?;
    for p in [&a.bench, &list, &a.patterns] {
        m.input(p)?;
    }
    let det = timed(&mut m, "detect", || {
        eval::assess(&vectors, &netlist, &specs)
    })?;
    let n = det.len() as f64;
    let report = DetectReport {
        circuit: circuit_name(&a.bench),
        test_vector_count: vectors.len(),
        trigger_coverage_pct: 100.0 * det.iter().map(|d| d.trigger_fraction).sum::<f64>() / n,
        trojan_coverage_pct: 100.0 * det.iter().filter(|d| d.detected).count() as f64 / n,
        full_trigger_pct: 100.0 * det.iter().filter(|d| d.fully_triggered).count() as f64 / n,
        outcomes: specs
            .iter()
            .zip(&det)
            .map(|(s, d)| DetectOutcome {
                trojan: s.id.clone(),
                trigger_fraction: d.trigger_fraction,
                fully_triggered: d.fully_triggered,
                detected: d.detected,
            })
            .collect(),
    };
    write_text(&a.out, &to_json(&report))?;
    m.output(&a.out);
    m.write_beside(&a.out)?;
    Ok(())
}

/// A campaign file: circuits (relative to the file), profiling settings and
/// the per-method configuration.
#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub circuits: Vec<PathBuf>,
    pub theta: f64,
    pub trials: usize,
    pub profile_seed: u64,
    pub campaign: CampaignConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            circuits: Vec::new(),
            theta: profile::DEFAULT_THETA,
            trials: profile::DEFAULT_TRIALS,
            profile_seed: 0,
            campaign: CampaignConfig::default(),
        }
    }
}

pub fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let mut m = RunManifest::new("bench");
    let cfg: BenchConfig = from_json(&a.config, &read_text(&a.config)?)?;
    m.input(&a.config)?;
    cfg.campaign
        .adatest
        .validate()
        .map_err(|e| CliError::Config {
            path: a.config.clone(),
            msg: e.to_string(),
        })?;
    if cfg.circuits.is_empty() {
        return Err(CliError::Config {
            path: a.config.clone(),
            msg: "no circuits listed".into(),
        });
    }
    let base = a.config.parent().unwrap_or(Path::new("."));
    let wall = WallClock(Instant::now());
    let clock: &dyn Clock = if a.timing { &wall } else { &NoClock };
    let mut reports = Vec::new();
    for c in &cfg.circuits {
        let path = base.join(c);
        let netlist = load_netlist(&path, None)?;
        m.input(&path)?;
        let name = circuit_name(&path);
        let p = Profile::compute(&netlist, cfg.theta, cfg.trials, cfg.profile_seed)?;
        let rows = timed(&mut m, &name, || {
            eval::run_campaign(&name, &netlist, &p, &cfg.campaign, clock)
        })?;
        reports.extend(rows);
    }
    write_text(&a.out, &to_json(&reports))?;
    m.output(&a.out);
    if let Some(csv) = &a.csv {
        write_text(csv, &report_csv(&reports))?;
        m.output(csv);
    }
    m.config = serde_json::to_value(&cfg).expect("serializable config");
    m.seeds.insert("campaign".into(), cfg.campaign.seed);
    m.seeds.insert("profile".into(), cfg.profile_seed);
    m.write_beside(&a.out)?;
    Ok(())
}

#[derive(Serialize)]
struct ResponseBufferDoc {
    po_count: usize,
    rom_word_bits: usize,
    cycles_per_comparison: usize,
    no_buffer: bool,
}

#[derive(Serialize)]
struct HardwareDoc {
    plan: PlanDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    response_buffer: Option<ResponseBufferDoc>,
}

pub fn cmd_emit_hw(a: &EmitHwArgs) -> Result<()> {
    let mut m = RunManifest::new("emit-hw");
    let vectors = read_patterns(&a.patterns, &read_text(&a.patterns)?, None)?;
    m.input(&a.patterns)?;
    if vectors.is_empty() {
        return Err(CliError::data(&a.patterns, "pattern file is empty"));
    }
    let mode = match a.mode {
        ModeArg::Distributed => Mode::Distributed,
        ModeArg::Centralized => Mode::Centralized,
    };
    let plan = if let Some(bench) = &a.cluster {
        m.input(bench)?;
        hwgen::plan_clustered(&load_netlist(bench, None)?, &vectors, mode)?
    } else if a.auto_chunk {
        let (_, best) = hwgen::sweep_chunk_sizes(&vectors)?;
        hwgen::plan_chunked(&vectors, best)?
    } else if let Some(chunk) = a.chunk {
        hwgen::plan_chunked(&vectors, chunk)?
    } else {
        TpgPlan {
            width: vectors[0].len(),
            ring_length: vectors.len(),
            segments: vec![Segment {
                tap: hwgen::derive_tap_matrix(&vectors, a.init_position)?,
                start: 0,
                end: vectors.len(),
            }],
            clusters: Vec::new(),
            mode,
        }
    };
    let cost = hwgen::estimate_cost(&plan);
    let mut doc = HardwareDoc {
        plan: plan_doc(&plan, cost),
        response_buffer: None,
    };
    if let Some(golden) = &a.golden {
        let netlist = load_netlist(golden, None)?;
        m.input(golden)?;
        let words = hwgen::golden_rom(&netlist, &vectors, a.rom_width)?;
        let rom = a.out_dir.join("rom.hex");
        write_text(&rom, &rom_hex(&words, a.rom_width))?;
        m.output(&rom);
        let po = netlist.outputs().len();
        let (cycles, no_buffer) = hwgen::size_response_buffer(po, a.rom_width)?;
        doc.response_buffer = Some(ResponseBufferDoc {
            po_count: po,
            rom_word_bits: a.rom_width,
            cycles_per_comparison: cycles,
            no_buffer,
        });
    }
    let tap = a.out_dir.join("tap.json");
    write_text(&tap, &to_json(&doc))?;
    let tpg = a.out_dir.join("tpg.bench");
    write_text(&tpg, &hwgen::emit_structural(&plan))?;
    m.output(&tap);
    m.output(&tpg);
    m.write_beside(&tap)?;
    Ok(())
}
