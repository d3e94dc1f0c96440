// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! Subcommand implementations behind the `cipollino` binary.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 usage error or
//! missing input, 3 malformed or inconsistent input data, 4 verification
//! failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::client::ClientConfig;
use crate::pathcache::{load_update, GraphUpdateBundle, PathOracle};
use crate::risk::{attack_success_matrix, ingest_moas};
use crate::sim::{
    compare_adversary_models, generate_mixed_workload, generate_web_workload, path_accuracy_report, read_workload,
    run_simulation, write_workload, ClientModel, ModelKind, SimInputs, WebWorkloadOptions,
};
use crate::topology::{load_topology_with_stubs, AsNumber, AsTopology};
use crate::tor::load_consensus;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error("missing input {name}: {}", path.display())]
    MissingInput { name: String, path: PathBuf },
    #[error("{name} ({}): {message}", path.display())]
    Integrity { name: String, path: PathBuf, message: String },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("writing {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Output { .. } => 1,
            CommandError::Usage(_) | CommandError::MissingInput { .. } => 2,
            CommandError::Integrity { .. } => 3,
            CommandError::Verification(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cipollino", version, about = "AS-aware circuit selection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay a workload through a client model.
    Simulate(SimulateArgs),
    /// Hijack and interception success rates for attacker and victim lists.
    HijackMatrix(HijackMatrixArgs),
    /// Over- and under-estimation of predicted paths against known paths.
    PathAccuracy(PathAccuracyArgs),
    /// Check measurement ids of sampled bundle edges against an archive.
    VerifyBundle(VerifyBundleArgs),
    /// Generate a web-browsing workload file.
    GenWebWorkload(GenWebArgs),
    /// Generate a mixed-application workload file.
    GenMixedWorkload(GenMixedArgs),
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    /// AS relationships, `a|b|rel` per line.
    #[arg(long)]
    pub topology: PathBuf,
    /// Prefix origins, `prefix|asn` per line.
    #[arg(long)]
    pub prefixes: Option<PathBuf>,
    /// Extra stub attachments, `stub|provider` per line.
    #[arg(long)]
    pub stubs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// Consensus snapshot, JSON lines.
    #[arg(long)]
    pub consensus: PathBuf,
    /// Path bundle; without it every path is simulated.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Recorded MOAS feed.
    #[arg(long)]
    pub moas: Option<PathBuf>,
    #[arg(long)]
    pub workload: PathBuf,
    /// `vanilla`, `perdest` or `cipollino`.
    #[arg(long, value_parser = parse_model)]
    pub model: ModelKind,
    #[arg(long)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Client configuration file, `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Configuration override, `key=value`; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct HijackMatrixArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    /// One attacker AS number per line.
    #[arg(long)]
    pub attackers: PathBuf,
    /// CSV `src_asn,victim_asn`.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PathAccuracyArgs {
    #[command(flatten)]
    pub topology: TopologyArgs,
    #[arg(long)]
    pub bundle: PathBuf,
    /// CSV `src_asn,dst_asn,path`.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyBundleArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Measurement ids held locally, one per line.
    #[arg(long)]
    pub archive: PathBuf,
    /// Number of measured edges to check; larger values check every edge.
    #[arg(long, default_value_t = 100)]
    pub sample: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenWebArgs {
    /// CSV `site,rank`.
    #[arg(long)]
    pub sites: PathBuf,
    /// CSV `site,ip,port`.
    #[arg(long)]
    pub dns: PathBuf,
    #[arg(long)]
    pub client_asn: AsNumber,
    #[arg(long, default_value = "2016-03-01T00:00:00Z")]
    pub start: DateTime<Utc>,
    /// Mean pause between page loads, seconds.
    #[arg(long, default_value_t = 30.0)]
    pub mean_gap: f64,
    #[arg(long)]
    pub seed: u64,
    /// Workload file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenMixedArgs {
    /// CSV `app,rate_per_hour,ports,ips`.
    #[arg(long)]
    pub profile: PathBuf,
    /// Length of the stream, seconds.
    #[arg(long, default_value_t = 3600)]
    pub duration: u64,
    #[arg(long)]
    pub client_asn: AsNumber,
    #[arg(long, default_value = "2016-03-01T00:00:00Z")]
    pub start: DateTime<Utc>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

/// What a run read and how it was parameterised. Written as `meta.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: BTreeMap<String, PathBuf>,
    pub seed: u64,
    pub overrides: Vec<(String, String)>,
    pub version: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            inputs: BTreeMap::new(),
            seed,
            overrides: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn input(mut self, name: &str, path: Option<&Path>) -> Self {
        if let Some(p) = path {
            self.inputs.insert(name.to_string(), p.to_path_buf());
        }
        self
    }

    /// Every referenced input must exist.
    pub fn validate(&self) -> Result<(), CommandError> {
        match self.inputs.iter().find(|(_, p)| !p.is_file()) {
            Some((name, path)) => Err(CommandError::MissingInput {
                name: name.clone(),
                path: path.clone(),
            }),
            None => Ok(()),
        }
    }

    fn path(&self, name: &str) -> Option<&Path> {
        self.inputs.get(name).map(PathBuf::as_path)
    }

    fn open(&self, name: &str) -> Result<Option<BufReader<File>>, CommandError> {
        let Some(path) = self.path(name) else {
            return Ok(None);
        };
        File::open(path).map(|f| Some(BufReader::new(f))).map_err(|_| CommandError::MissingInput {
            name: name.to_string(),
            path: path.to_path_buf(),
        })
    }

    fn require(&self, name: &str) -> Result<BufReader<File>, CommandError> {
        self.open(name)?.ok_or_else(|| CommandError::Usage(format!("--{name} is required")))
    }

    fn integrity(&self, name: &str, e: impl std::fmt::Display) -> CommandError {
        CommandError::Integrity {
            name: name.to_string(),
            path: self.path(name).map(Path::to_path_buf).unwrap_or_default(),
            message: e.to_string(),
        }
    }

    fn write_meta(&self, out: &Path) -> Result<(), CommandError> {
        write_file(&out.join("meta.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, self)?;
            writeln!(w)
        })
    }
}

fn topology_inputs(m: RunManifest, t: &TopologyArgs) -> RunManifest {
    m.input("topology", Some(&t.topology))
        .input("prefixes", t.prefixes.as_deref())
        .input("stubs", t.stubs.as_deref())
}

fn load_topology(m: &RunManifest) -> Result<AsTopology, CommandError> {
    let rels = m.require("topology")?;
    let prefixes: Box<dyn std::io::Read> = match m.open("prefixes")? {
        Some(r) => Box::new(r),
        None => Box::new(std::io::empty()),
    };
    let stubs = m.open("stubs")?;
    load_topology_with_stubs(rels, prefixes, stubs).map_err(|e| m.integrity("topology", e))
}

fn load_bundle(m: &RunManifest) -> Result<GraphUpdateBundle, CommandError> {
    match m.open("bundle")? {
        Some(r) => load_update(r).map_err(|e| m.integrity("bundle", e)),
        None => Ok(GraphUpdateBundle::empty()),
    }
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CommandError> {
    let run = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        body(&mut w)?;
        w.flush()
    };
    run().map_err(|source| CommandError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn out_dir(out: &Path) -> Result<(), CommandError> {
    std::fs::create_dir_all(out).map_err(|source| CommandError::Output {
        path: out.to_path_buf(),
        source,
    })
}

fn split_override(s: &str) -> Result<(String, String), CommandError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CommandError::Usage(format!("override {s:?} is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CommandError> {
    let mut m = topology_inputs(RunManifest::new("simulate", args.seed), &args.topology)
        .input("consensus", Some(&args.consensus))
        .input("bundle", args.bundle.as_deref())
        .input("moas", args.moas.as_deref())
        .input("workload", Some(&args.workload))
        .input("config", args.config.as_deref());
    m.overrides = args.overrides.iter().map(|s| split_override(s)).collect::<Result<_, _>>()?;
    m.overrides.push(("model".into(), args.model.to_string()));
    m.validate()?;

    let mut config_text = match m.path("config") {
        Some(p) => std::fs::read_to_string(p).map_err(|e| m.integrity("config", e))?,
        None => String::new(),
    };
    for (k, v) in m.overrides.iter().filter(|(k, _)| k != "model") {
        config_text.push_str(&format!("\n{k} = {v}"));
    }
    let config = ClientConfig::parse(&config_text).map_err(|e| m.integrity("config", e))?;

    let topology = load_topology(&m)?;
    let snapshot = load_consensus(m.require("consensus")?, &topology).map_err(|e| m.integrity("consensus", e))?;
    let bundle = load_bundle(&m)?;
    let alerts = match m.open("moas")? {
        Some(r) => ingest_moas(r, &topology).map_err(|e| m.integrity("moas", e))?,
        None => Vec::new(),
    };
    let workload = read_workload(m.require("workload")?).map_err(|e| m.integrity("workload", e))?;

    let inputs = SimInputs {
        snapshot: &snapshot,
        bundle: &bundle,
        topology: &topology,
        alerts: &alerts,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let run = run_simulation(&ClientModel::new(args.model, config), &workload, &inputs, &mut rng);
    let comparison = compare_adversary_models(&run, &PathOracle::new(&bundle, &topology));

    out_dir(&args.out)?;
    write_file(&args.out.join("summary.csv"), |w| run.report.write_summary_csv(w))?;
    write_file(&args.out.join("trace.jsonl"), |w| run.write_trace_jsonl(w))?;
    write_file(&args.out.join("load.csv"), |w| run.report.write_load_csv(w))?;
    write_file(&args.out.join("adversary_models.csv"), |w| comparison.write_csv(w))?;
    m.write_meta(&args.out)
}

fn read_asn_lines(m: &RunManifest, name: &str) -> Result<BTreeSet<AsNumber>, CommandError> {
    let mut out = BTreeSet::new();
    for (i, line) in m.require(name)?.lines().enumerate() {
        let line = line.map_err(|e| m.integrity(name, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.insert(t.parse().map_err(|e| m.integrity(name, format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

fn read_pairs(m: &RunManifest) -> Result<Vec<(AsNumber, AsNumber)>, CommandError> {
    let mut out = Vec::new();
    for (i, line) in m.require("pairs")?.lines().enumerate() {
        let line = line.map_err(|e| m.integrity("pairs", e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("src") {
            continue;
        }
        let bad = |e: String| m.integrity("pairs", format!("line {}: {e}", i + 1));
        let (a, b) = t.split_once(',').ok_or_else(|| bad("expected src_asn,victim_asn".into()))?;
        out.push((a.parse().map_err(bad)?, b.parse().map_err(bad)?));
    }
    Ok(out)
}

pub fn cmd_hijack_matrix(args: &HijackMatrixArgs) -> Result<(), CommandError> {
    let m = topology_inputs(RunManifest::new("hijack-matrix", args.seed), &args.topology)
        .input("attackers", Some(&args.attackers))
        .input("pairs", Some(&args.pairs));
    m.validate()?;
    let topology = load_topology(&m)?;
    let attackers = read_asn_lines(&m, "attackers")?;
    let pairs = read_pairs(&m)?;
    let matrix = attack_success_matrix(&topology, &attackers, &pairs).map_err(|e| m.integrity("pairs", e))?;
    out_dir(&args.out)?;
    write_file(&args.out.join("attackers.csv"), |w| matrix.write_attackers_csv(w))?;
    write_file(&args.out.join("victims.csv"), |w| matrix.write_victims_csv(w))?;
    m.write_meta(&args.out)
}

pub fn cmd_path_accuracy(args: &PathAccuracyArgs) -> Result<(), CommandError> {
    let m = topology_inputs(RunManifest::new("path-accuracy", args.seed), &args.topology)
        .input("bundle", Some(&args.bundle))
        .input("truth", Some(&args.truth));
    m.validate()?;
    let topology = load_topology(&m)?;
    let bundle = load_bundle(&m)?;
    let oracle = PathOracle::new(&bundle, &topology);
    let report = path_accuracy_report(&oracle, m.require("truth")?).map_err(|e| m.integrity("truth", e))?;
    out_dir(&args.out)?;
    write_file(&args.out.join("histogram.csv"), |w| report.write_histogram_csv(w))?;
    write_file(&args.out.join("rows.csv"), |w| report.write_rows_csv(w))?;
    m.write_meta(&args.out)
}

/// Measurement ids of up to `sample` measured edges missing from the archive.
/// Returns the number checked and the offenders.
pub fn verify_bundle(
    bundle: &GraphUpdateBundle,
    archive: &BTreeSet<String>,
    sample: usize,
    seed: u64,
) -> (usize, Vec<String>) {
    let edges: Vec<_> = bundle.measured_edges().collect();
    let picked: Vec<usize> = if sample >= edges.len() {
        (0..edges.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, edges.len(), sample).into_vec();
        idx.sort_unstable();
        idx
    };
    let missing = picked
        .iter()
        .map(|&i| edges[i])
        .filter(|e| !archive.contains(&e.provenance.measurement_id))
        .map(|e| format!("{}->{} {}", e.from, e.to, e.provenance.measurement_id))
        .collect();
    (picked.len(), missing)
}

pub fn cmd_verify_bundle(args: &VerifyBundleArgs) -> Result<(), CommandError> {
    let m = RunManifest::new("verify-bundle", args.seed)
        .input("bundle", Some(&args.bundle))
        .input("archive", Some(&args.archive));
    m.validate()?;
    let bundle = load_bundle(&m)?;
    let mut archive = BTreeSet::new();
    for line in m.require("archive")?.lines() {
        let line = line.map_err(|e| m.integrity("archive", e))?;
        let id = line.split(',').next().unwrap_or("").trim();
        if !id.is_empty() && !id.starts_with('#') {
            archive.insert(id.to_string());
        }
    }
    let (checked, missing) = verify_bundle(&bundle, &archive, args.sample, args.seed);
    if missing.is_empty() {
        println!("verified {checked} measured edges");
        Ok(())
    } else {
        for e in &missing {
            eprintln!("not in archive: {e}");
        }
        Err(CommandError::Verification(format!("{} of {checked} sampled edges not in archive", missing.len())))
    }
}

pub fn cmd_gen_web_workload(args: &GenWebArgs) -> Result<(), CommandError> {
    let m = RunManifest::new("gen-web-workload", args.seed)
        .input("sites", Some(&args.sites))
        .input("dns", Some(&args.dns));
    m.validate()?;
    let mut opts = WebWorkloadOptions::new(args.start, args.client_asn);
    if !(args.mean_gap.is_finite() && args.mean_gap > 0.0) {
        return Err(CommandError::Usage("--mean-gap must be positive".into()));
    }
    opts.mean_gap_seconds = args.mean_gap;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let stream = generate_web_workload(m.require("sites")?, m.require("dns")?, opts, &mut rng)
        .map_err(|e| m.integrity("sites", e))?;
    write_file(&args.out, |w| write_workload(&stream, w))
}

pub fn cmd_gen_mixed_workload(args: &GenMixedArgs) -> Result<(), CommandError> {
    let m = RunManifest::new("gen-mixed-workload", args.seed).input("profile", Some(&args.profile));
    m.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let stream = generate_mixed_workload(m.require("profile")?, args.duration, args.start, args.client_asn, &mut rng)
        .map_err(|e| m.integrity("profile", e))?;
    write_file(&args.out, |w| write_workload(&stream, w))
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::HijackMatrix(a) => cmd_hijack_matrix(a),
        Command::PathAccuracy(a) => cmd_path_accuracy(a),
        Command::VerifyBundle(a) => cmd_verify_bundle(a),
        Command::GenWebWorkload(a) => cmd_gen_web_workload(a),
        Command::GenMixedWorkload(a) => cmd_gen_mixed_workload(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
