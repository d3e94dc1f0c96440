// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::net::Ipv4Addr;

use super::types::{mask, AsNumber, Prefix};

/// Longest-prefix-match table from IPv4 prefixes to origin ASes.
///
/// One hash map per prefix length; a lookup probes from /32 down to /0, skipping
/// lengths with no entries.
#[derive(Debug, Clone, Default)]
pub struct PrefixTable {
    by_length: Vec<HashMap<u32, AsNumber>>,
    populated: Vec<u8>,
    len: usize,
}

impl PrefixTable {
    pub fn new() -> Self {
        PrefixTable {
            by_length: vec![HashMap::new(); 33],
            populated: Vec::new(),
            len: 0,
        }
    }

    /// Inserts or replaces an entry, returning the previous origin.
    pub fn insert(&mut self, prefix: Prefix, origin: AsNumber) -> Option<AsNumber> {
        if self.by_length.is_empty() {
            *self = PrefixTable::new();
        }
        let slot = &mut self.by_length[usize::from(prefix.len())];
        let previous = slot.insert(prefix.bits(), origin);
        if previous.is_none() {
            self.len += 1;
            if !self.populated.contains(&prefix.len()) {
                self.populated.push(prefix.len());
                self.populated.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        previous
    }

    pub fn get(&self, prefix: &Prefix) -> Option<AsNumber> {
        self.by_length
            .get(usize::from(prefix.len()))?
            .get(&prefix.bits())
            .copied()
    }

    /// Longest matching prefix for `addr` together with its origin.
    pub fn longest_match(&self, addr: Ipv4Addr) -> Option<(Prefix, AsNumber)> {
        let bits = u32::from(addr);
        self.populated.iter().find_map(|&length| {
            let network = bits & mask(length);
            self.by_length[usize::from(length)]
                .get(&network)
                .map(|origin| (Prefix::covering(addr, length), *origin))
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// All entries in address order, shortest prefix first on ties.
    pub fn entries(&self) -> Vec<(Prefix, AsNumber)> {
        let mut out: Vec<(Prefix, AsNumber)> = self
            .by_length
            .iter()
            .enumerate()
            .flat_map(|(length, map)| {
                map.iter().map(move |(bits, origin)| {
                    (
                        Prefix::covering(Ipv4Addr::from(*bits), length as u8),
                        *origin,
                    )
                })
            })
            .collect();
        out.sort();
        out
    }

    /// Prefixes originated by each AS.
    pub fn prefixes_by_origin(&self) -> BTreeMap<AsNumber, Vec<Prefix>> {
        let mut out: BTreeMap<AsNumber, Vec<Prefix>> = BTreeMap::new();
        for (prefix, origin) in self.entries() {
            out.entry(origin).or_default().push(prefix);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::types::asn;

    #[test]
    fn longest_match_prefers_specific() {
        let mut table = PrefixTable::new();
        table.insert("10.0.0.0/8".parse().unwrap(), asn(2));
        table.insert("10.1.0.0/16".parse().unwrap(), asn(3));
        let (p, origin) = table.longest_match(Ipv4Addr::new(10, 1, 5, 5)).unwrap();
        assert_eq!(origin, asn(3));
        assert_eq!(p.to_string(), "10.1.0.0/16");
        assert_eq!(
            table.longest_match(Ipv4Addr::new(10, 2, 0, 1)).unwrap().1,
            asn(2)
        );
        assert!(table.longest_match(Ipv4Addr::new(192, 168, 0, 1)).is_none());
    }

    #[test]
    fn default_route_and_host_routes() {
        let mut table = PrefixTable::default();
        table.insert("0.0.0.0/0".parse().unwrap(), asn(1));
        table.insert("8.8.8.8/32".parse().unwrap(), asn(15169));
        assert_eq!(table.longest_match(Ipv4Addr::new(8, 8, 8, 8)).unwrap().1, asn(15169));
        assert_eq!(table.longest_match(Ipv4Addr::new(8, 8, 8, 9)).unwrap().1, asn(1));
        assert_eq!(table.len(), 2);
    }

    #[test]
    fn replace_keeps_len() {
        let mut table = PrefixTable::new();
        let p: Prefix = "10.0.0.0/8".parse().unwrap();
        assert_eq!(table.insert(p, asn(2)), None);
        assert_eq!(table.insert(p, asn(4)), Some(asn(2)));
        assert_eq!(table.len(), 1);
        assert_eq!(table.get(&p), Some(asn(4)));
    }
}
