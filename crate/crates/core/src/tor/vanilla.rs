// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use rand::Rng;

use super::circuit::{Circuit, CircuitId, CircuitIds};
use super::consensus::ConsensusSnapshot;
use super::relay::{ExitTarget, Relay};
use super::select::{constraints_ok, weighted_select};
use super::TorError;

/// Attempts at drawing a constraint-compatible middle and exit before giving up.
pub const MAX_RESAMPLES: usize = 100;

/// Ports count as recently used for this long after their last request.
pub const PORT_WINDOW_SECONDS: i64 = 3600;

/// Circuits kept ready per recently used port.
pub const CIRCUITS_PER_PORT: usize = 2;

/// Ordered guard list. Entries stay in the list while offline so that a
/// returning guard regains its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuardState {
    ordered_guards: Vec<String>,
    size: usize,
}

impl Default for GuardState {
    fn default() -> Self {
        GuardState::new(GuardState::DEFAULT_SIZE)
    }
}

impl GuardState {
    pub const DEFAULT_SIZE: usize = 3;

    pub fn new(size: usize) -> Self {
        GuardState {
            ordered_guards: Vec::new(),
            size: size.max(1),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ordered_guards(&self) -> &[String] {
        &self.ordered_guards
    }

    /// Listed guards that are present and Guard-flagged in `snapshot`, in list order.
    pub fn usable<'s>(&self, snapshot: &'s ConsensusSnapshot) -> Vec<&'s Arc<Relay>> {
        self.ordered_guards
            .iter()
            .filter_map(|fp| snapshot.relay(fp))
            .filter(|r| r.is_guard())
            .collect()
    }

    pub fn first_usable(&self, snapshot: &ConsensusSnapshot) -> Option<Arc<Relay>> {
        self.usable(snapshot).first().map(|r| Arc::clone(r))
    }

    /// Appends bandwidth-weighted draws over unlisted Guard relays until the
    /// list has `size` usable entries or no candidates remain.
    pub fn ensure<R: Rng + ?Sized>(&mut self, snapshot: &ConsensusSnapshot, rng: &mut R) {
        while self.usable(snapshot).len() < self.size {
            let candidates: Vec<&Arc<Relay>> = snapshot
                .guards()
                .filter(|g| g.bandwidth > 0 && !self.ordered_guards.contains(&g.fingerprint))
                .collect();
            match weighted_select(&candidates, rng) {
                Ok(g) => self.ordered_guards.push(g.fingerprint.clone()),
                Err(_) => break,
            }
        }
    }
}

/// Builds a circuit the way an unmodified client does: the first usable guard,
/// then bandwidth-weighted exit and middle, resampling on constraint violations.
pub fn vanilla_build<R: Rng + ?Sized>(
    snapshot: &ConsensusSnapshot,
    guards: &mut GuardState,
    target: ExitTarget,
    id: CircuitId,
    now: DateTime<Utc>,
    rng: &mut R,
) -> Result<Circuit, TorError> {
    guards.ensure(snapshot, rng);
    let entry = guards.first_usable(snapshot).ok_or(TorError::NoGuard)?;
    let exits: Vec<&Arc<Relay>> = snapshot
        .exits()
        .filter(|r| r.bandwidth > 0 && r.supports(&target))
        .collect();
    if exits.is_empty() {
        return Err(TorError::NoExit { port: target.port });
    }
    let all = snapshot.relays();
    for _ in 0..MAX_RESAMPLES {
        let exit = weighted_select(&exits, rng)?;
        let middle = weighted_select(all, rng)?;
        if constraints_ok(&[&entry, middle, exit])? {
            return Circuit::new(id, entry, Arc::clone(middle), Arc::clone(exit), now);
        }
    }
    Err(TorError::Constraints(format!(
        "no compatible middle and exit for guard {entry} after {MAX_RESAMPLES} draws"
    )))
}

/// Outcome of one maintenance pass.
#[derive(Debug, Default)]
pub struct PoolMaintenance {
    pub built: Vec<CircuitId>,
    pub failures: Vec<(u16, TorError)>,
}

/// Tops up `pool` so that each port requested within the last hour has at
/// least two live circuits able to exit to it. Existing circuits are not touched.
#[allow(clippy::too_many_arguments)]
pub fn vanilla_pool_maintain<R: Rng + ?Sized>(
    snapshot: &ConsensusSnapshot,
    pool: &mut Vec<Circuit>,
    guards: &mut GuardState,
    ids: &mut CircuitIds,
    recent_ports: &BTreeMap<u16, DateTime<Utc>>,
    now: DateTime<Utc>,
    rng: &mut R,
) -> PoolMaintenance {
    let mut report = PoolMaintenance::default();
    let window = Duration::seconds(PORT_WINDOW_SECONDS);
    for (&port, &last_seen) in recent_ports {
        if now - last_seen > window {
            continue;
        }
        let target = ExitTarget::port(port);
        let mut have = pool.iter().filter(|c| c.is_live() && c.supports(&target)).count();
        while have < CIRCUITS_PER_PORT {
            match vanilla_build(snapshot, guards, target, ids.next_id(), now, rng) {
                Ok(c) => {
                    report.built.push(c.id());
                    pool.push(c);
                    have += 1;
                }
                Err(e) => {
                    report.failures.push((port, e));
                    break;
                }
            }
        }
    }
    report
}
