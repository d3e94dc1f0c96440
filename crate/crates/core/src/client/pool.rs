// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use rand::Rng;

use super::config::PoolGuardMode;
use super::exposure::{exposure_from, mark_safety, AdversaryModel, ConnectionRequest, Endpoints, ExposureContext, SafetyVerdict, SuspectSets};
use super::select::pick_middle;
use super::ClientError;
use crate::risk::MoasAlert;
use crate::topology::{AsNumber, Prefix};
use crate::tor::{weighted_select, Circuit, CircuitIds, ConsensusSnapshot, GuardState, Relay, TorError};

/// Circuits built ahead of demand.
#[derive(Debug, Clone)]
pub struct CircuitPool {
    circuits: Vec<Circuit>,
    target_size: usize,
}

impl CircuitPool {
    pub fn new(target_size: usize) -> Self {
        CircuitPool {
            circuits: Vec::new(),
            target_size,
        }
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn circuits_mut(&mut self) -> &mut [Circuit] {
        &mut self.circuits
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }

    pub fn push(&mut self, circuit: Circuit) {
        self.circuits.push(circuit);
    }
}

/// Drops dirty and closed circuits, then builds until the pool holds
/// `target_size` live circuits. Returns the circuits built.
pub fn replenish<R: Rng + ?Sized>(
    pool: &mut CircuitPool,
    snapshot: &ConsensusSnapshot,
    guards: &mut GuardState,
    mode: PoolGuardMode,
    ids: &mut CircuitIds,
    now: DateTime<Utc>,
    rng: &mut R,
) -> Vec<Circuit> {
    pool.circuits.retain(Circuit::is_live);
    let mut built = Vec::new();
    while pool.circuits.len() < pool.target_size {
        match prebuild(snapshot, guards, mode, ids, now, rng) {
            Ok(c) => {
                built.push(c.clone());
                pool.circuits.push(c);
            }
            Err(e) => {
                log::warn!("pool replenish stopped at {} circuits: {e}", pool.circuits.len());
                break;
            }
        }
    }
    built
}

/// One destination-agnostic circuit: entry per `mode`, exit weighted over Exit
/// relays, middle weighted over all relays.
fn prebuild<R: Rng + ?Sized>(
    snapshot: &ConsensusSnapshot,
    guards: &mut GuardState,
    mode: PoolGuardMode,
    ids: &mut CircuitIds,
    now: DateTime<Utc>,
    rng: &mut R,
) -> Result<Circuit, ClientError> {
    let exits: Vec<&Arc<Relay>> = snapshot.exits().filter(|e| e.bandwidth > 0).collect();
    let all_guards: Vec<&Arc<Relay>> = snapshot.guards().collect();
    let listed = match mode {
        PoolGuardMode::GuardList => {
            guards.ensure(snapshot, rng);
            Some(guards.first_usable(snapshot).ok_or(TorError::NoGuard)?)
        }
        PoolGuardMode::Weighted => None,
    };
    for _ in 0..crate::tor::MAX_RESAMPLES {
        let entry = match &listed {
            Some(g) => Arc::clone(g),
            None => Arc::clone(weighted_select(&all_guards, rng)?),
        };
        let exit = weighted_select(&exits, rng)?;
        if let Some(middle) = pick_middle(snapshot, &entry, exit, rng) {
            return Ok(Circuit::new(ids.next_id(), entry, middle, Arc::clone(exit), now)?);
        }
    }
    Err(TorError::Constraints("no compatible circuit for the pool".into()).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct VerdictKey {
    circuit: crate::tor::CircuitId,
    src: AsNumber,
    dst: AsNumber,
    dst_prefix: Prefix,
}

#[derive(Debug, Clone)]
struct CachedVerdict {
    verdict: SafetyVerdict,
    prefixes: Vec<Prefix>,
}

/// Safety verdicts per (circuit, client AS, destination AS, destination prefix).
/// Entries are dropped when a new alert could change their suspects, and all of
/// them when the path bundle changes.
#[derive(Debug, Clone, Default)]
pub struct VerdictCache {
    entries: BTreeMap<VerdictKey, CachedVerdict>,
    hits: u64,
    misses: u64,
}

impl VerdictCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Verdict for `circuit` serving `request`, computed on a miss.
    pub fn verdict(&mut self, circuit: &Circuit, request: &ConnectionRequest, ctx: &ExposureContext<'_>) -> SafetyVerdict {
        let ends = match Endpoints::resolve(circuit, request, ctx) {
            Ok(ends) => ends,
            Err(e) => return SafetyVerdict::unresolved(e),
        };
        let key = VerdictKey {
            circuit: circuit.id(),
            src: ends.src,
            dst: ends.dst,
            dst_prefix: ends.dst_prefix,
        };
        if let Some(hit) = self.entries.get(&key) {
            self.hits += 1;
            return hit.verdict.clone();
        }
        self.misses += 1;
        let suspects = SuspectSets::from_alerts(ctx.alerts, &ends);
        let verdict = mark_safety(&exposure_from(ctx.paths, &ends, &suspects, AdversaryModel::AsymmetricHijack));
        self.entries.insert(
            key,
            CachedVerdict {
                verdict: verdict.clone(),
                prefixes: ends.prefixes().collect(),
            },
        );
        verdict
    }

    /// Drops verdicts that consulted a prefix covered by one of `alerts`.
    /// Returns how many were dropped.
    pub fn invalidate(&mut self, alerts: &[MoasAlert]) -> usize {
        let before = self.entries.len();
        self.entries
            .retain(|_, v| !v.prefixes.iter().any(|p| alerts.iter().any(|a| a.prefix().covers(p))));
        before - self.entries.len()
    }

    /// Forgets circuits not in `live`.
    pub fn retain_circuits(&mut self, live: &BTreeSet<crate::tor::CircuitId>) {
        self.entries.retain(|k, _| live.contains(&k.circuit));
    }
}

/// Applies newly published alerts to the pool's cached verdicts. Affected
/// circuits are re-marked on their next allocation; nothing is torn down.
pub fn reverify_pool(cache: &mut VerdictCache, new_alerts: &[MoasAlert]) -> usize {
    if new_alerts.is_empty() {
        return 0;
    }
    cache.invalidate(new_alerts)
}
