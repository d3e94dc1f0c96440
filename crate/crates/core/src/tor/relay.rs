// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::net::Ipv4Addr;

use bitflags::bitflags;

use crate::topology::{AsNumber, Prefix};

bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct RelayFlags: u8 {
        const GUARD = 0b0001;
        const EXIT = 0b0010;
        const STABLE = 0b0100;
        const FAST = 0b1000;
    }
}

impl RelayFlags {
    /// Parses a consensus flag name. Flags the model does not use map to `None`.
    pub fn from_consensus_name(name: &str) -> Option<RelayFlags> {
        match name {
            "Guard" => Some(RelayFlags::GUARD),
            "Exit" => Some(RelayFlags::EXIT),
            "Stable" => Some(RelayFlags::STABLE),
            "Fast" => Some(RelayFlags::FAST),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyAction {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddressPattern {
    Any,
    Network(Prefix),
}

impl AddressPattern {
    fn matches(&self, ip: Ipv4Addr) -> bool {
        match self {
            AddressPattern::Any => true,
            AddressPattern::Network(p) => p.contains_addr(ip),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyRule {
    pub action: PolicyAction,
    pub address: AddressPattern,
    pub ports: (u16, u16),
}

impl PolicyRule {
    pub fn new(action: PolicyAction, address: AddressPattern, lo: u32, hi: u32) -> Result<Self, String> {
        if lo < 1 || lo > hi || hi > 65535 {
            return Err(format!("invalid port range {lo}-{hi}"));
        }
        Ok(PolicyRule {
            action,
            address,
            ports: (lo as u16, hi as u16),
        })
    }

    fn covers_port(&self, port: u16) -> bool {
        self.ports.0 <= port && port <= self.ports.1
    }
}

/// Ordered accept/reject rules, evaluated first match wins. A destination that
/// matches no rule is rejected.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExitPolicy {
    rules: Vec<PolicyRule>,
}

impl ExitPolicy {
    pub fn new(rules: Vec<PolicyRule>) -> Self {
        ExitPolicy { rules }
    }

    pub fn accept_all() -> Self {
        ExitPolicy::new(vec![PolicyRule {
            action: PolicyAction::Accept,
            address: AddressPattern::Any,
            ports: (1, 65535),
        }])
    }

    pub fn reject_all() -> Self {
        ExitPolicy::new(vec![PolicyRule {
            action: PolicyAction::Reject,
            address: AddressPattern::Any,
            ports: (1, 65535),
        }])
    }

    pub fn rules(&self) -> &[PolicyRule] {
        &self.rules
    }

    pub fn allows(&self, ip: Ipv4Addr, port: u16) -> bool {
        self.rules
            .iter()
            .find(|r| r.covers_port(port) && r.address.matches(ip))
            .map(|r| r.action == PolicyAction::Accept)
            .unwrap_or(false)
    }

    /// Whether some destination address is accepted on `port`. Used when the
    /// address is not yet known, as for predictive circuits.
    pub fn allows_port(&self, port: u16) -> bool {
        for rule in self.rules.iter().filter(|r| r.covers_port(port)) {
            match (rule.action, rule.address) {
                (action, AddressPattern::Any) => return action == PolicyAction::Accept,
                (PolicyAction::Accept, AddressPattern::Network(_)) => return true,
                (PolicyAction::Reject, AddressPattern::Network(_)) => {}
            }
        }
        false
    }
}

/// Destination a circuit must be able to reach. The address is absent for
/// circuits built ahead of time for a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitTarget {
    pub ip: Option<Ipv4Addr>,
    pub port: u16,
}

impl ExitTarget {
    pub fn new(ip: Ipv4Addr, port: u16) -> Self {
        ExitTarget { ip: Some(ip), port }
    }

    pub fn port(port: u16) -> Self {
        ExitTarget { ip: None, port }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relay {
    pub fingerprint: String,
    pub address: Ipv4Addr,
    /// Origin AS of the relay's address; `None` when the prefix table has no match.
    pub asn: Option<AsNumber>,
    /// Longest matching prefix for the relay's address.
    pub prefix: Option<Prefix>,
    pub bandwidth: u64,
    pub flags: RelayFlags,
    pub family: Option<String>,
    pub exit_policy: ExitPolicy,
}

impl Relay {
    pub fn is_guard(&self) -> bool {
        self.flags.contains(RelayFlags::GUARD)
    }

    pub fn is_exit(&self) -> bool {
        self.flags.contains(RelayFlags::EXIT)
    }

    pub fn supports(&self, target: &ExitTarget) -> bool {
        match target.ip {
            Some(ip) => self.exit_policy.allows(ip, target.port),
            None => self.exit_policy.allows_port(target.port),
        }
    }

    /// The relay's /16, which no two relays of one circuit may share.
    pub fn subnet16(&self) -> Prefix {
        Prefix::covering(self.address, 16)
    }
}

impl AsRef<Relay> for Relay {
    fn as_ref(&self) -> &Relay {
        self
    }
}

impl fmt::Display for Relay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fingerprint)
    }
}
