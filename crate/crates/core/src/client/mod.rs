// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! The AS-aware client: hijack-augmented exposure sets, safety marking, a pool
//! of pre-built circuits reused whenever safe, and on-demand construction.

mod config;
mod exposure;
mod pool;
mod select;

use std::collections::BTreeSet;

use chrono::Duration;
use rand::Rng;

pub use config::{ClientConfig, ConfigError, PoolGuardMode};
pub use exposure::{
    compute_exposure, compute_exposure_with, exposure_from, mark_safety, AdversaryModel,
    ConnectionRequest, Endpoints, ExposureContext, ExposureError, ExposureSets, SafetyVerdict,
    SuspectSets,
};
pub use pool::{replenish, reverify_pool, CircuitPool, VerdictCache};
pub use select::{
    allocate, allocate_with, build_on_demand, weighted_pick, selection_probabilities, circuit_weight,
    fallback_select, verdict_for, OnDemandOutcome,
};

use crate::tor::{Circuit, CircuitIds, ConsensusSnapshot, GuardState, TorError};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Tor(#[from] TorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AllocationKind {
    /// An existing circuit was safe for the request.
    Reused,
    /// A new circuit was built and found safe.
    BuiltSafe,
    /// No safe circuit was found; the least exposed candidate was used.
    UnsafeFallback,
}

impl AllocationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AllocationKind::Reused => "reused",
            AllocationKind::BuiltSafe => "built",
            AllocationKind::UnsafeFallback => "unsafe-fallback",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Allocation {
    pub circuit: Circuit,
    pub kind: AllocationKind,
    pub verdict: SafetyVerdict,
    /// Every circuit constructed while serving this request, pool refills included.
    pub built: Vec<Circuit>,
}

/// One client instance. Owns its guard list, pool and verdict cache.
#[derive(Debug, Clone)]
pub struct CipollinoClient {
    config: ClientConfig,
    guards: GuardState,
    pool: CircuitPool,
    on_demand: Vec<Circuit>,
    ids: CircuitIds,
    cache: VerdictCache,
    bundle_generation: Option<u64>,
    alerts_seen: usize,
}

impl CipollinoClient {
    pub fn new(config: ClientConfig) -> Self {
        CipollinoClient {
            guards: GuardState::new(config.guard_list_size),
            pool: CircuitPool::new(config.pool_target),
            on_demand: Vec::new(),
            ids: CircuitIds::default(),
            cache: VerdictCache::default(),
            bundle_generation: None,
            alerts_seen: 0,
            config,
        }
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    pub fn pool(&self) -> &CircuitPool {
        &self.pool
    }

    pub fn on_demand(&self) -> &[Circuit] {
        &self.on_demand
    }

    pub fn guards(&self) -> &GuardState {
        &self.guards
    }

    pub fn cache(&self) -> &VerdictCache {
        &self.cache
    }

    /// Brings cached verdicts up to date with the bundle generation and the
    /// published alerts in `ctx`.
    pub fn sync(&mut self, ctx: &ExposureContext<'_>, bundle_generation: u64) {
        if self.bundle_generation != Some(bundle_generation) {
            self.cache.clear();
            self.bundle_generation = Some(bundle_generation);
        }
        if ctx.alerts.len() < self.alerts_seen {
            self.cache.clear();
        } else {
            reverify_pool(&mut self.cache, &ctx.alerts[self.alerts_seen..]);
        }
        self.alerts_seen = ctx.alerts.len();
    }

    /// Ages circuits and refills the pool as of `now`. Returns new circuits.
    pub fn maintain<R: Rng + ?Sized>(
        &mut self,
        snapshot: &ConsensusSnapshot,
        now: chrono::DateTime<chrono::Utc>,
        rng: &mut R,
    ) -> Vec<Circuit> {
        let dirty = Duration::seconds(self.config.dirty_timeout_seconds);
        for c in self.pool.circuits_mut().iter_mut().chain(self.on_demand.iter_mut()) {
            c.expire(now, dirty);
        }
        self.on_demand.retain(Circuit::is_live);
        let built = replenish(
            &mut self.pool,
            snapshot,
            &mut self.guards,
            self.config.pool_guard_mode,
            &mut self.ids,
            now,
            rng,
        );
        let live: BTreeSet<_> = self.circuits().map(Circuit::id).collect();
        self.cache.retain_circuits(&live);
        built
    }

    fn circuits(&self) -> impl Iterator<Item = &Circuit> {
        self.pool.circuits().iter().chain(&self.on_demand)
    }

    /// Serves one request: reuse a safe live circuit if there is one, otherwise
    /// build on demand.
    pub fn handle<R: Rng + ?Sized>(
        &mut self,
        request: &ConnectionRequest,
        snapshot: &ConsensusSnapshot,
        ctx: &ExposureContext<'_>,
        bundle_generation: u64,
        rng: &mut R,
    ) -> Result<Allocation, ClientError> {
        self.sync(ctx, bundle_generation);
        let mut built = self.maintain(snapshot, request.at, rng);

        let cache = &mut self.cache;
        let chosen = allocate_with(
            self.pool.circuits().iter().chain(&self.on_demand),
            request,
            |c| cache.verdict(c, request, ctx),
            rng,
        )
        .map(Circuit::id);
        if let Some(id) = chosen {
            let circuit = self
                .pool
                .circuits_mut()
                .iter_mut()
                .chain(self.on_demand.iter_mut())
                .find(|c| c.id() == id)
                .expect("allocated circuit is held by the client");
            circuit.mark_used(request.at);
            let verdict = self.cache.verdict(circuit, request, ctx);
            return Ok(Allocation {
                circuit: circuit.clone(),
                kind: AllocationKind::Reused,
                verdict,
                built,
            });
        }

        let outcome = build_on_demand(
            snapshot,
            request,
            ctx,
            self.config.candidate_budget,
            self.ids.next_id(),
            rng,
        )?;
        let mut circuit = outcome.circuit;
        circuit.mark_used(request.at);
        built.push(circuit.clone());
        self.on_demand.push(circuit.clone());
        Ok(Allocation {
            circuit,
            kind: if outcome.fallback {
                AllocationKind::UnsafeFallback
            } else {
                AllocationKind::BuiltSafe
            },
            verdict: outcome.verdict,
            built,
        })
    }
}
