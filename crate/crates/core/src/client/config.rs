// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use crate::risk::AlertFeed;
use crate::tor::{Circuit, GuardState};

/// How pre-built circuits pick their entry relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolGuardMode {
    /// First usable entry of the guard list, as the stock client does.
    #[default]
    GuardList,
    /// Bandwidth-weighted over all Guard relays.
    Weighted,
}

impl FromStr for PoolGuardMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "guard_list" => Ok(PoolGuardMode::GuardList),
            "weighted" => Ok(PoolGuardMode::Weighted),
            other => Err(format!("unknown pool_guard_mode {other:?}")),
        }
    }
}

impl fmt::Display for PoolGuardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolGuardMode::GuardList => "guard_list",
            PoolGuardMode::Weighted => "weighted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientConfig {
    pub pool_target: usize,
    pub candidate_budget: usize,
    pub feed_interval_seconds: i64,
    pub guard_list_size: usize,
    pub rng_seed: Option<u64>,
    pub pool_guard_mode: PoolGuardMode,
    pub dirty_timeout_seconds: i64,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            pool_target: 4,
            candidate_budget: 64,
            feed_interval_seconds: AlertFeed::DEFAULT_INTERVAL_SECONDS,
            guard_list_size: GuardState::DEFAULT_SIZE,
            rng_seed: None,
            pool_guard_mode: PoolGuardMode::GuardList,
            dirty_timeout_seconds: Circuit::DEFAULT_DIRTY_SECONDS,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("client config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ClientConfig {
    /// Reads `key = value` lines. Blank lines and `#` comments are ignored and
    /// unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ClientConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError { line: idx + 1, message };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
                value.parse().map_err(|_| format!("{key}: invalid value {value:?}"))
            }
            match key {
                "pool_target" => cfg.pool_target = num(key, value).map_err(err)?,
                "candidate_budget" => cfg.candidate_budget = num(key, value).map_err(err)?,
                "feed_interval_seconds" => cfg.feed_interval_seconds = num(key, value).map_err(err)?,
                "guard_list_size" => cfg.guard_list_size = num(key, value).map_err(err)?,
                "rng_seed" => cfg.rng_seed = Some(num(key, value).map_err(err)?),
                "pool_guard_mode" => cfg.pool_guard_mode = value.parse().map_err(err)?,
                "dirty_timeout_seconds" => cfg.dirty_timeout_seconds = num(key, value).map_err(err)?,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        if cfg.candidate_budget == 0 {
            return Err(ConfigError {
                line: 0,
                message: "candidate_budget must be positive".into(),
            });
        }
        if cfg.guard_list_size == 0 || cfg.feed_interval_seconds <= 0 || cfg.dirty_timeout_seconds <= 0 {
            return Err(ConfigError {
                line: 0,
                message: "guard_list_size, feed_interval_seconds and dirty_timeout_seconds must be positive".into(),
            });
        }
        Ok(cfg)
    }
}
