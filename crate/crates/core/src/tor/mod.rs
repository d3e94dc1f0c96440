// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! The relay network as seen by a client: consensus snapshots, exit policies,
//! bandwidth-weighted relay selection and the stock circuit-building behaviour.

mod circuit;
mod consensus;
mod relay;
mod select;
mod vanilla;

use std::net::Ipv4Addr;

pub use circuit::{Circuit, CircuitId, CircuitIds, CircuitState};
pub use consensus::{load_consensus, ConsensusError, ConsensusSnapshot};
pub use relay::{AddressPattern, ExitPolicy, ExitTarget, PolicyAction, PolicyRule, Relay, RelayFlags};
pub use select::{constraints_ok, weighted_select};
pub use vanilla::{
    vanilla_build, vanilla_pool_maintain, GuardState, PoolMaintenance, CIRCUITS_PER_PORT,
    MAX_RESAMPLES, PORT_WINDOW_SECONDS,
};

#[derive(Debug, thiserror::Error)]
pub enum TorError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("relay selection failed: {0}")]
    Selection(String),
    #[error("path constraints: {0}")]
    Constraints(String),
    #[error("no usable guard in the consensus")]
    NoGuard,
    #[error("no exit relay accepts port {port}")]
    NoExit { port: u16 },
}

/// Whether `relay`'s exit policy accepts `ip:port`.
pub fn exit_supports(relay: &Relay, ip: Ipv4Addr, port: u32) -> Result<bool, TorError> {
    let port = u16::try_from(port)
        .ok()
        .filter(|p| *p >= 1)
        .ok_or_else(|| TorError::Argument(format!("port {port} outside 1-65535")))?;
    Ok(relay.exit_policy.allows(ip, port))
}
