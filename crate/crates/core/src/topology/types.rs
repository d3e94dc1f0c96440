// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A 32-bit autonomous system number. Zero is reserved and rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct AsNumber(u32);

impl AsNumber {
    pub fn new(value: u32) -> Option<Self> {
        (value > 0).then_some(AsNumber(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for AsNumber {
    type Error = String;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        AsNumber::new(value).ok_or_else(|| "AS number 0 is reserved".to_string())
    }
}

impl From<AsNumber> for u32 {
    fn from(asn: AsNumber) -> u32 {
        asn.0
    }
}

impl fmt::Display for AsNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for AsNumber {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_prefix("AS").unwrap_or(s);
        let value: u32 = s.parse().map_err(|e| format!("invalid AS number {s:?}: {e}"))?;
        AsNumber::try_from(value)
    }
}

/// Shorthand used heavily in tests and fixtures.
///
/// Panics on zero.
pub fn asn(value: u32) -> AsNumber {
    AsNumber::new(value).expect("AS number must be non-zero")
}

/// An IPv4 network with all host bits cleared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prefix {
    network: u32,
    length: u8,
}

impl Prefix {
    pub fn new(addr: Ipv4Addr, length: u8) -> Result<Self, String> {
        if length > 32 {
            return Err(format!("prefix length {length} exceeds 32"));
        }
        let network = u32::from(addr);
        if network & !mask(length) != 0 {
            return Err(format!("{addr}/{length} has host bits set"));
        }
        Ok(Prefix { network, length })
    }

    /// Builds the prefix of the given length covering `addr`, clearing host bits.
    pub fn covering(addr: Ipv4Addr, length: u8) -> Self {
        let length = length.min(32);
        Prefix {
            network: u32::from(addr) & mask(length),
            length,
        }
    }

    pub fn network(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.network)
    }

    pub fn len(&self) -> u8 {
        self.length
    }

    pub fn is_default(&self) -> bool {
        self.length == 0
    }

    pub fn contains_addr(&self, addr: Ipv4Addr) -> bool {
        u32::from(addr) & mask(self.length) == self.network
    }

    /// True when `other` is equal to or more specific than `self`.
    pub fn covers(&self, other: &Prefix) -> bool {
        other.length >= self.length && other.network & mask(self.length) == self.network
    }

    pub fn overlaps(&self, other: &Prefix) -> bool {
        self.covers(other) || other.covers(self)
    }

    pub(crate) fn bits(&self) -> u32 {
        self.network
    }
}

pub(crate) fn mask(length: u8) -> u32 {
    match length {
        0 => 0,
        l => u32::MAX << (32 - u32::from(l)),
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.network(), self.length)
    }
}

impl FromStr for Prefix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (addr, len) = match s.split_once('/') {
            Some((a, l)) => (a, l),
            None => (s, "32"),
        };
        let addr: Ipv4Addr = addr
            .parse()
            .map_err(|e| format!("invalid address in {s:?}: {e}"))?;
        let len: u8 = len
            .parse()
            .map_err(|e| format!("invalid prefix length in {s:?}: {e}"))?;
        Prefix::new(addr, len)
    }
}

impl Serialize for Prefix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Prefix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationshipKind {
    /// `a` is a provider of `b`.
    ProviderToCustomer,
    PeerToPeer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AsRelationship {
    pub a: AsNumber,
    pub b: AsNumber,
    pub kind: RelationshipKind,
}

/// A loop-free AS-level path, source first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AsPath(Vec<AsNumber>);

impl AsPath {
    /// Returns `None` for empty or looping hop lists.
    pub fn new(hops: Vec<AsNumber>) -> Option<Self> {
        if hops.is_empty() {
            return None;
        }
        let mut seen = std::collections::BTreeSet::new();
        if !hops.iter().all(|h| seen.insert(*h)) {
            return None;
        }
        Some(AsPath(hops))
    }

    pub fn hops(&self) -> &[AsNumber] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn source(&self) -> AsNumber {
        self.0[0]
    }

    pub fn destination(&self) -> AsNumber {
        *self.0.last().expect("non-empty path")
    }

    pub fn contains(&self, asn: AsNumber) -> bool {
        self.0.contains(&asn)
    }
}

impl fmt::Display for AsPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hops: Vec<String> = self.0.iter().map(|h| h.to_string()).collect();
        write!(f, "{}", hops.join("-"))
    }
}

impl FromStr for AsPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hops = s
            .split('-')
            .map(|h| h.parse::<AsNumber>())
            .collect::<Result<Vec<_>, _>>()?;
        AsPath::new(hops).ok_or_else(|| format!("path {s:?} is empty or contains a loop"))
    }
}
