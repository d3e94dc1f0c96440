// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use serde::Serialize;

use super::workload::WorkloadStream;
use crate::client::{
    build_on_demand, verdict_for, AllocationKind, CipollinoClient, ClientConfig, ConnectionRequest, ExposureContext,
    SafetyVerdict,
};
use crate::pathcache::{GraphUpdateBundle, PathOracle};
use crate::risk::{AlertFeed, MoasAlert};
use crate::topology::{AsNumber, AsTopology};
use crate::tor::{vanilla_build, vanilla_pool_maintain, Circuit, CircuitIds, ConsensusSnapshot, GuardState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    /// Unmodified client: guard list, bandwidth weighting, aggressive reuse.
    Vanilla,
    /// One destination-aware circuit per destination AS, reused while live.
    PerDestination,
    /// Pool of pre-built circuits reused when safe, on-demand otherwise.
    Cipollino,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Vanilla => "vanilla",
            ModelKind::PerDestination => "perdest",
            ModelKind::Cipollino => "cipollino",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vanilla" => Ok(ModelKind::Vanilla),
            "perdest" | "per-destination" => Ok(ModelKind::PerDestination),
            "cipollino" => Ok(ModelKind::Cipollino),
            _ => Err(format!("unknown client model {s:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientModel {
    pub kind: ModelKind,
    pub config: ClientConfig,
}

impl ClientModel {
    pub fn new(kind: ModelKind, config: ClientConfig) -> Self {
        ClientModel { kind, config }
    }
}

/// Everything a replay reads besides the workload.
#[derive(Debug, Clone, Copy)]
pub struct SimInputs<'a> {
    pub snapshot: &'a ConsensusSnapshot,
    pub bundle: &'a GraphUpdateBundle,
    pub topology: &'a AsTopology,
    /// The full recorded feed; alerts are released as the replay clock passes them.
    pub alerts: &'a [MoasAlert],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Reused,
    Built,
    UnsafeFallback,
    Failed,
}

/// One line of the per-request trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub request_index: usize,
    pub circuit_id: Option<u64>,
    pub reused: bool,
    pub safe: bool,
    pub adversaries: Vec<AsNumber>,
    pub outcome: Outcome,
}

/// A request together with the circuit that carried it.
#[derive(Debug, Clone)]
pub struct ServedRequest {
    pub request_index: usize,
    pub request: ConnectionRequest,
    pub circuit: Circuit,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimReport {
    pub model: String,
    pub requests: usize,
    pub failed: usize,
    pub allocations_reused: usize,
    pub allocations_built: usize,
    pub unsafe_fallbacks: usize,
    pub circuits_built: usize,
    pub circuits_used: usize,
    pub vulnerable_circuits: usize,
    pub vulnerable_requests: usize,
    pub vulnerable_circuit_fraction: f64,
    pub vulnerable_request_fraction: f64,
    pub unique_relays: usize,
    /// Number of constructed circuits each relay appeared in.
    pub per_relay_load: BTreeMap<String, usize>,
}

impl SimReport {
    pub fn served(&self) -> usize {
        self.allocations_reused + self.allocations_built
    }

    /// `metric,value` rows.
    pub fn write_summary_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "metric,value")?;
        writeln!(out, "model,{}", self.model)?;
        let counts = [
            ("requests", self.requests),
            ("served", self.served()),
            ("failed", self.failed),
            ("allocations_reused", self.allocations_reused),
            ("allocations_built", self.allocations_built),
            ("unsafe_fallbacks", self.unsafe_fallbacks),
            ("circuits_built", self.circuits_built),
            ("circuits_used", self.circuits_used),
            ("vulnerable_circuits", self.vulnerable_circuits),
            ("vulnerable_requests", self.vulnerable_requests),
        ];
        for (k, v) in counts {
            writeln!(out, "{k},{v}")?;
        }
        writeln!(out, "vulnerable_circuit_fraction,{:.6}", self.vulnerable_circuit_fraction)?;
        writeln!(out, "vulnerable_request_fraction,{:.6}", self.vulnerable_request_fraction)?;
        writeln!(out, "unique_relays,{}", self.unique_relays)
    }

    /// `fingerprint,circuits` rows, sorted by fingerprint.
    pub fn write_load_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "fingerprint,circuits")?;
        for (fp, n) in &self.per_relay_load {
            writeln!(out, "{fp},{n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimRun {
    pub report: SimReport,
    pub trace: Vec<TraceRecord>,
    pub served: Vec<ServedRequest>,
}

impl SimRun {
    pub fn write_trace_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.trace {
            writeln!(out, "{}", serde_json::to_string(r)?)?;
        }
        Ok(())
    }
}

struct Served {
    circuit: Circuit,
    kind: AllocationKind,
    built: Vec<Circuit>,
}

trait Replayer {
    fn serve(
        &mut self,
        request: &ConnectionRequest,
        snapshot: &ConsensusSnapshot,
        ctx: &ExposureContext<'_>,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Served, String>;
}

struct VanillaReplay {
    guards: GuardState,
    pool: Vec<Circuit>,
    ids: CircuitIds,
    recent_ports: BTreeMap<u16, DateTime<Utc>>,
    dirty: Duration,
}

impl Replayer for VanillaReplay {
    fn serve(
        &mut self,
        request: &ConnectionRequest,
        snapshot: &ConsensusSnapshot,
        _ctx: &ExposureContext<'_>,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Served, String> {
        for c in &mut self.pool {
            c.expire(request.at, self.dirty);
        }
        self.pool.retain(Circuit::is_live);
        self.recent_ports.insert(request.dest_port, request.at);
        let maintenance = vanilla_pool_maintain(
            snapshot,
            &mut self.pool,
            &mut self.guards,
            &mut self.ids,
            &self.recent_ports,
            request.at,
            rng,
        );
        for (port, e) in &maintenance.failures {
            log::debug!("prediction for port {port} failed: {e}");
        }
        let mut built: Vec<Circuit> = self
            .pool
            .iter()
            .filter(|c| maintenance.built.contains(&c.id()))
            .cloned()
            .collect();

        let target = request.target();
        let newest = self
            .pool
            .iter_mut()
            .filter(|c| c.is_live() && c.supports(&target))
            .max_by_key(|c| (c.built_at(), c.id()));
        let (circuit, kind) = match newest {
            Some(c) => {
                c.mark_used(request.at);
                (c.clone(), AllocationKind::Reused)
            }
            None => {
                let mut c = vanilla_build(snapshot, &mut self.guards, target, self.ids.next_id(), request.at, rng)
                    .map_err(|e| e.to_string())?;
                c.mark_used(request.at);
                built.push(c.clone());
                self.pool.push(c.clone());
                (c, AllocationKind::BuiltSafe)
            }
        };
        // Circuits built by the prediction pass for this very request count as built.
        let kind = if built.iter().any(|b| b.id() == circuit.id()) {
            AllocationKind::BuiltSafe
        } else {
            kind
        };
        Ok(Served { circuit, kind, built })
    }
}

struct PerDestinationReplay {
    budget: usize,
    circuits: Vec<Circuit>,
    by_destination: BTreeMap<Option<AsNumber>, crate::tor::CircuitId>,
    ids: CircuitIds,
    dirty: Duration,
}

impl Replayer for PerDestinationReplay {
    fn serve(
        &mut self,
        request: &ConnectionRequest,
        snapshot: &ConsensusSnapshot,
        ctx: &ExposureContext<'_>,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Served, String> {
        for c in &mut self.circuits {
            c.expire(request.at, self.dirty);
        }
        self.circuits.retain(Circuit::is_live);
        let dst = ctx.paths.topology().ip_to_asn(request.dest_ip);
        let target = request.target();
        if let Some(&id) = self.by_destination.get(&dst) {
            if let Some(c) = self.circuits.iter_mut().find(|c| c.id() == id && c.supports(&target)) {
                c.mark_used(request.at);
                return Ok(Served {
                    circuit: c.clone(),
                    kind: AllocationKind::Reused,
                    built: Vec::new(),
                });
            }
        }
        let outcome =
            build_on_demand(snapshot, request, ctx, self.budget, self.ids.next_id(), rng).map_err(|e| e.to_string())?;
        let mut circuit = outcome.circuit;
        circuit.mark_used(request.at);
        self.by_destination.insert(dst, circuit.id());
        self.circuits.push(circuit.clone());
        Ok(Served {
            kind: if outcome.fallback {
                AllocationKind::UnsafeFallback
            } else {
                AllocationKind::BuiltSafe
            },
            built: vec![circuit.clone()],
            circuit,
        })
    }
}

struct CipollinoReplay(CipollinoClient);

impl Replayer for CipollinoReplay {
    fn serve(
        &mut self,
        request: &ConnectionRequest,
        snapshot: &ConsensusSnapshot,
        ctx: &ExposureContext<'_>,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Served, String> {
        let a = self.0.handle(request, snapshot, ctx, 0, rng).map_err(|e| e.to_string())?;
        Ok(Served {
            circuit: a.circuit,
            kind: a.kind,
            built: a.built,
        })
    }
}

fn replayer(model: &ClientModel) -> Box<dyn Replayer> {
    let dirty = Duration::seconds(model.config.dirty_timeout_seconds);
    match model.kind {
        ModelKind::Vanilla => Box::new(VanillaReplay {
            guards: GuardState::new(model.config.guard_list_size),
            pool: Vec::new(),
            ids: CircuitIds::default(),
            recent_ports: BTreeMap::new(),
            dirty,
        }),
        ModelKind::PerDestination => Box::new(PerDestinationReplay {
            budget: model.config.candidate_budget,
            circuits: Vec::new(),
            by_destination: BTreeMap::new(),
            ids: CircuitIds::default(),
            dirty,
        }),
        ModelKind::Cipollino => Box::new(CipollinoReplay(CipollinoClient::new(model.config.clone()))),
    }
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Replays every request of `workload` through `model`. The safety of each
/// allocation is recomputed under the full adversary regardless of what the
/// model itself considered.
pub fn run_simulation<R: Rng>(model: &ClientModel, workload: &WorkloadStream, inputs: &SimInputs<'_>, rng: &mut R) -> SimRun {
    let oracle = PathOracle::new(inputs.bundle, inputs.topology);
    let mut feed = AlertFeed::new(inputs.alerts.to_vec(), model.config.feed_interval_seconds);
    let mut client = replayer(model);

    let mut report = SimReport {
        model: model.kind.to_string(),
        requests: workload.len(),
        ..SimReport::default()
    };
    let mut trace = Vec::with_capacity(workload.len());
    let mut served = Vec::new();
    let mut relays: BTreeSet<String> = BTreeSet::new();
    let mut used: BTreeMap<crate::tor::CircuitId, bool> = BTreeMap::new();

    for (index, request) in workload.requests().iter().enumerate() {
        feed.advance(request.at);
        let published = feed.published();
        let ctx = ExposureContext {
            paths: &oracle,
            alerts: &published,
        };
        let result = client.serve(request, inputs.snapshot, &ctx, rng);
        let s = match result {
            Ok(s) => s,
            Err(e) => {
                log::warn!("request {index} to {}:{} failed: {e}", request.dest_ip, request.dest_port);
                report.failed += 1;
                trace.push(TraceRecord {
                    request_index: index,
                    circuit_id: None,
                    reused: false,
                    safe: false,
                    adversaries: Vec::new(),
                    outcome: Outcome::Failed,
                });
                continue;
            }
        };
        for c in &s.built {
            report.circuits_built += 1;
            for r in c.relays() {
                relays.insert(r.fingerprint.clone());
                *report.per_relay_load.entry(r.fingerprint.clone()).or_default() += 1;
            }
        }
        let verdict: SafetyVerdict = verdict_for(&s.circuit, request, &ctx);
        let reused = s.kind == AllocationKind::Reused;
        if reused {
            report.allocations_reused += 1;
        } else {
            report.allocations_built += 1;
        }
        if s.kind == AllocationKind::UnsafeFallback {
            report.unsafe_fallbacks += 1;
        }
        if !verdict.safe {
            report.vulnerable_requests += 1;
        }
        *used.entry(s.circuit.id()).or_default() |= !verdict.safe;
        trace.push(TraceRecord {
            request_index: index,
            circuit_id: Some(s.circuit.id().0),
            reused,
            safe: verdict.safe,
            adversaries: verdict.adversaries.into_iter().collect(),
            outcome: match s.kind {
                AllocationKind::Reused => Outcome::Reused,
                AllocationKind::BuiltSafe => Outcome::Built,
                AllocationKind::UnsafeFallback => Outcome::UnsafeFallback,
            },
        });
        served.push(ServedRequest {
            request_index: index,
            request: *request,
            circuit: s.circuit,
        });
    }

    report.circuits_used = used.len();
    report.vulnerable_circuits = used.values().filter(|v| **v).count();
    report.vulnerable_circuit_fraction = ratio(report.vulnerable_circuits, report.circuits_used);
    report.vulnerable_request_fraction = ratio(report.vulnerable_requests, report.served());
    report.unique_relays = relays.len();
    SimRun {
        report,
        trace,
        served,
    }
}
