// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};

use crate::topology::{AsNumber, AsTopology, Prefix};

#[derive(Debug, thiserror::Error)]
pub enum MoasError {
    #[error("MOAS feed line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A prefix announced by more than one origin at the same time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoasAlert {
    observed_at: DateTime<Utc>,
    prefix: Prefix,
    origins: BTreeSet<AsNumber>,
    registered_origin: Option<AsNumber>,
}

impl MoasAlert {
    /// Fails unless at least two distinct origins are given.
    pub fn new(
        observed_at: DateTime<Utc>,
        prefix: Prefix,
        origins: impl IntoIterator<Item = AsNumber>,
        registered_origin: Option<AsNumber>,
    ) -> Result<Self, String> {
        let origins: BTreeSet<AsNumber> = origins.into_iter().collect();
        if origins.len() < 2 {
            return Err(format!("{prefix} has a single origin; not a MOAS conflict"));
        }
        Ok(MoasAlert {
            observed_at,
            prefix,
            origins,
            registered_origin,
        })
    }

    pub fn observed_at(&self) -> DateTime<Utc> {
        self.observed_at
    }

    pub fn prefix(&self) -> Prefix {
        self.prefix
    }

    pub fn origins(&self) -> &BTreeSet<AsNumber> {
        &self.origins
    }

    pub fn registered_origin(&self) -> Option<AsNumber> {
        self.registered_origin
    }

    /// False when the prefix table has no entry for the alerted prefix.
    pub fn verifiable(&self) -> bool {
        self.registered_origin.is_some()
    }

    /// Every origin except the registered one. Unverifiable alerts suspect all origins.
    pub fn suspects(&self) -> impl Iterator<Item = AsNumber> + '_ {
        self.origins
            .iter()
            .copied()
            .filter(move |o| Some(*o) != self.registered_origin)
    }
}

/// Parses `timestamp,prefix,origins` rows (origins `;`-separated). A leading
/// header row is skipped. The registered origin comes from the topology's
/// prefix table, exact prefix only.
pub fn ingest_moas(feed: impl Read, topology: &AsTopology) -> Result<Vec<MoasAlert>, MoasError> {
    let mut alerts = Vec::new();
    for (idx, line) in BufReader::new(feed).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (line_no == 1 && line.starts_with("timestamp")) {
            continue;
        }
        let err = |message: String| MoasError::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let observed_at = DateTime::parse_from_rfc3339(fields[0])
            .map_err(|e| err(format!("bad timestamp {:?}: {e}", fields[0])))?
            .with_timezone(&Utc);
        let prefix: Prefix = fields[1].parse().map_err(err)?;
        let origins = fields[2]
            .split(';')
            .map(|o| o.parse::<AsNumber>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let registered = topology.registered_origin(&prefix);
        let alert = MoasAlert::new(observed_at, prefix, origins, registered).map_err(err)?;
        if !alert.verifiable() {
            log::warn!("MOAS alert for {prefix} cannot be verified against the prefix table");
        }
        alerts.push(alert);
    }
    alerts.sort_by_key(|a| a.observed_at);
    Ok(alerts)
}

/// Union of suspects over alerts whose prefix equals or covers `prefix`.
pub fn suspects_for(alerts: &[MoasAlert], prefix: Prefix) -> BTreeSet<AsNumber> {
    alerts
        .iter()
        .filter(|a| a.prefix.covers(&prefix))
        .flat_map(|a| a.suspects())
        .collect()
}

/// Replays a recorded feed, publishing alerts to consumers in batches every
/// `interval` of feed time.
#[derive(Debug, Clone)]
pub struct AlertFeed {
    pending: Vec<MoasAlert>,
    published: Arc<Vec<MoasAlert>>,
    interval: Duration,
    last_poll: Option<DateTime<Utc>>,
}

impl AlertFeed {
    pub const DEFAULT_INTERVAL_SECONDS: i64 = 3600;

    pub fn new(mut alerts: Vec<MoasAlert>, interval_seconds: i64) -> Self {
        alerts.sort_by_key(|a| a.observed_at);
        AlertFeed {
            pending: alerts,
            published: Arc::new(Vec::new()),
            interval: Duration::seconds(interval_seconds.max(1)),
            last_poll: None,
        }
    }

    /// Polls the feed if `now` is at least one interval after the last poll.
    /// Returns true when new alerts were published.
    pub fn advance(&mut self, now: DateTime<Utc>) -> bool {
        if let Some(last) = self.last_poll {
            if now - last < self.interval {
                return false;
            }
        }
        self.last_poll = Some(now);
        let split = self.pending.partition_point(|a| a.observed_at <= now);
        if split == 0 {
            return false;
        }
        let fresh: Vec<MoasAlert> = self.pending.drain(..split).collect();
        let mut all = (*self.published).clone();
        all.extend(fresh);
        self.published = Arc::new(all);
        true
    }

    pub fn published(&self) -> Arc<Vec<MoasAlert>> {
        self.published.clone()
    }
}
