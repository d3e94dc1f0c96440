// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};

use super::relay::{ExitTarget, Relay};
use super::select::constraints_ok;
use super::TorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct CircuitId(pub u64);

impl fmt::Display for CircuitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Hands out circuit ids in increasing order for one client.
#[derive(Debug, Clone, Default)]
pub struct CircuitIds {
    next: u64,
}

impl CircuitIds {
    pub fn next_id(&mut self) -> CircuitId {
        let id = CircuitId(self.next);
        self.next += 1;
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CircuitState {
    Live,
    Dirty,
    Closed,
}

/// Three-hop circuit. Cryptographic state is not modelled.
#[derive(Debug, Clone)]
pub struct Circuit {
    id: CircuitId,
    entry: Arc<Relay>,
    middle: Arc<Relay>,
    exit: Arc<Relay>,
    built_at: DateTime<Utc>,
    state: CircuitState,
    first_used: Option<DateTime<Utc>>,
}

impl Circuit {
    /// Seconds a circuit stays usable for new streams after its first use.
    pub const DEFAULT_DIRTY_SECONDS: i64 = 600;

    pub fn new(
        id: CircuitId,
        entry: Arc<Relay>,
        middle: Arc<Relay>,
        exit: Arc<Relay>,
        built_at: DateTime<Utc>,
    ) -> Result<Self, TorError> {
        if !constraints_ok(&[&entry, &middle, &exit])? {
            return Err(TorError::Constraints(format!(
                "{entry}, {middle}, {exit} violate path constraints"
            )));
        }
        Ok(Circuit {
            id,
            entry,
            middle,
            exit,
            built_at,
            state: CircuitState::Live,
            first_used: None,
        })
    }

    pub fn id(&self) -> CircuitId {
        self.id
    }

    pub fn entry(&self) -> &Arc<Relay> {
        &self.entry
    }

    pub fn middle(&self) -> &Arc<Relay> {
        &self.middle
    }

    pub fn exit(&self) -> &Arc<Relay> {
        &self.exit
    }

    pub fn relays(&self) -> [&Arc<Relay>; 3] {
        [&self.entry, &self.middle, &self.exit]
    }

    pub fn built_at(&self) -> DateTime<Utc> {
        self.built_at
    }

    pub fn state(&self) -> CircuitState {
        self.state
    }

    pub fn first_used(&self) -> Option<DateTime<Utc>> {
        self.first_used
    }

    pub fn is_live(&self) -> bool {
        self.state == CircuitState::Live
    }

    pub fn supports(&self, target: &ExitTarget) -> bool {
        self.exit.supports(target)
    }

    /// Records a stream attached at `now`.
    pub fn mark_used(&mut self, now: DateTime<Utc>) {
        self.first_used.get_or_insert(now);
    }

    /// Moves the circuit forward to `state`. Earlier states are never re-entered.
    pub fn advance(&mut self, state: CircuitState) {
        self.state = self.state.max(state);
    }

    /// Marks the circuit dirty once it has been in use for `dirty_after`.
    pub fn expire(&mut self, now: DateTime<Utc>, dirty_after: Duration) {
        if let Some(first) = self.first_used {
            if now - first >= dirty_after {
                self.advance(CircuitState::Dirty);
            }
        }
    }
}
