// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::net::Ipv4Addr;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::relay::{AddressPattern, ExitPolicy, PolicyAction, PolicyRule, Relay, RelayFlags};
use crate::topology::AsTopology;

#[derive(Debug, thiserror::Error)]
pub enum ConsensusError {
    #[error("consensus line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("consensus is missing its header record")]
    MissingHeader,
    #[error("consensus lists relay {0} more than once")]
    DuplicateFingerprint(String),
    #[error("consensus lists no relays")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct Header {
    valid_at: DateTime<Utc>,
}

#[derive(Deserialize)]
struct RelayRecord {
    fp: String,
    ip: Ipv4Addr,
    bw: u64,
    flags: Vec<String>,
    family: Option<String>,
    policy: Vec<(String, String, u32, u32)>,
}

/// Immutable view of the relay network at one consensus period.
#[derive(Debug, Clone)]
pub struct ConsensusSnapshot {
    valid_at: DateTime<Utc>,
    relays: Vec<Arc<Relay>>,
    by_fingerprint: HashMap<String, usize>,
}

impl ConsensusSnapshot {
    /// Fails on an empty relay list or a repeated fingerprint.
    pub fn new(valid_at: DateTime<Utc>, relays: Vec<Relay>) -> Result<Self, ConsensusError> {
        if relays.is_empty() {
            return Err(ConsensusError::Empty);
        }
        let mut by_fingerprint = HashMap::with_capacity(relays.len());
        for (i, r) in relays.iter().enumerate() {
            if by_fingerprint.insert(r.fingerprint.clone(), i).is_some() {
                return Err(ConsensusError::DuplicateFingerprint(r.fingerprint.clone()));
            }
        }
        Ok(ConsensusSnapshot {
            valid_at,
            relays: relays.into_iter().map(Arc::new).collect(),
            by_fingerprint,
        })
    }

    pub fn valid_at(&self) -> DateTime<Utc> {
        self.valid_at
    }

    pub fn relays(&self) -> &[Arc<Relay>] {
        &self.relays
    }

    pub fn len(&self) -> usize {
        self.relays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relays.is_empty()
    }

    pub fn relay(&self, fingerprint: &str) -> Option<&Arc<Relay>> {
        self.by_fingerprint.get(fingerprint).map(|&i| &self.relays[i])
    }

    pub fn guards(&self) -> impl Iterator<Item = &Arc<Relay>> {
        self.relays.iter().filter(|r| r.is_guard())
    }

    pub fn exits(&self) -> impl Iterator<Item = &Arc<Relay>> {
        self.relays.iter().filter(|r| r.is_exit())
    }

    /// Circuits can be built only if some relay can serve each position.
    pub fn is_usable(&self) -> bool {
        self.guards().next().is_some() && self.exits().next().is_some()
    }

    /// Relays whose address matched no prefix.
    pub fn unresolved(&self) -> impl Iterator<Item = &Arc<Relay>> {
        self.relays.iter().filter(|r| r.asn.is_none())
    }
}

fn parse_policy(rules: Vec<(String, String, u32, u32)>) -> Result<ExitPolicy, String> {
    rules
        .into_iter()
        .map(|(action, pattern, lo, hi)| {
            let action = match action.as_str() {
                "accept" => PolicyAction::Accept,
                "reject" => PolicyAction::Reject,
                other => return Err(format!("unknown policy action {other:?}")),
            };
            let address = if pattern == "*" {
                AddressPattern::Any
            } else {
                AddressPattern::Network(pattern.parse()?)
            };
            PolicyRule::new(action, address, lo, hi)
        })
        .collect::<Result<Vec<_>, _>>()
        .map(ExitPolicy::new)
}

/// Reads a JSON-lines consensus: a `valid_at` header record, then one record per
/// relay. Each relay's AS is resolved through the topology's prefix table.
pub fn load_consensus(file: impl Read, topology: &AsTopology) -> Result<ConsensusSnapshot, ConsensusError> {
    let mut valid_at = None;
    let mut relays = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConsensusError::Parse {
            line: line_no,
            message,
        };
        if valid_at.is_none() {
            let header: Header = serde_json::from_str(line).map_err(|_| ConsensusError::MissingHeader)?;
            valid_at = Some(header.valid_at);
            continue;
        }
        let rec: RelayRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let exit_policy = parse_policy(rec.policy).map_err(err)?;
        let flags = rec
            .flags
            .iter()
            .filter_map(|f| RelayFlags::from_consensus_name(f))
            .fold(RelayFlags::empty(), |acc, f| acc | f);
        let resolved = topology.lookup(rec.ip);
        if resolved.is_none() {
            log::warn!("relay {} at {} has no origin AS", rec.fp, rec.ip);
        }
        relays.push(Relay {
            fingerprint: rec.fp,
            address: rec.ip,
            asn: resolved.map(|(_, a)| a),
            prefix: resolved.map(|(p, _)| p),
            bandwidth: rec.bw,
            flags,
            family: rec.family.filter(|f| !f.is_empty()),
            exit_policy,
        });
    }
    let valid_at = valid_at.ok_or(ConsensusError::MissingHeader)?;
    ConsensusSnapshot::new(valid_at, relays)
}
