// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! Test-only oracles and fixture generators. Nothing here calls into the routing
//! engine; the oracles only read the topology's adjacency through its public API.
#![allow(dead_code)]

pub mod scenarios;
pub mod world;

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use cipollino::topology::{asn, AsNumber, AsRelationship, AsTopology, Prefix, RelationshipKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random hierarchy on `n` ASes numbered 1..=n. Providers always have a lower
/// number than their customers, so the customer-provider graph is acyclic.
pub fn random_topology(rng: &mut impl Rng, n: u32, p_provider: f64, p_peer: f64) -> AsTopology {
    let mut builder = AsTopology::builder();
    for v in 1..=n {
        builder.add_node(asn(v));
    }
    for a in 1..=n {
        for b in (a + 1)..=n {
            let roll: f64 = rng.random();
            let kind = if roll < p_provider {
                Some(RelationshipKind::ProviderToCustomer)
            } else if roll < p_provider + p_peer {
                Some(RelationshipKind::PeerToPeer)
            } else {
                None
            };
            if let Some(kind) = kind {
                builder
                    .add_relationship(AsRelationship { a: asn(a), b: asn(b), kind })
                    .unwrap();
            }
        }
    }
    builder.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Class {
    Origin,
    Customer,
    Peer,
    Provider,
}

/// Relationship of `neighbor` as seen from `me`.
fn class_via(topo: &AsTopology, me: AsNumber, neighbor: AsNumber) -> Option<Class> {
    let rel = topo.relationship(me, neighbor)?;
    Some(match rel.kind {
        RelationshipKind::PeerToPeer => Class::Peer,
        RelationshipKind::ProviderToCustomer if rel.a == me => Class::Customer,
        RelationshipKind::ProviderToCustomer => Class::Provider,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRoute {
    pub class: Class,
    pub length: usize,
    pub origin: usize,
    pub paths: BTreeSet<Vec<AsNumber>>,
}

/// Brute-force BGP convergence: every AS repeatedly re-selects its best routes
/// from what its neighbors currently export, until nothing changes.
///
/// Ties between origins go to the one listed first.
pub fn converge(topo: &AsTopology, origins: &[AsNumber]) -> BTreeMap<AsNumber, OracleRoute> {
    let nodes: Vec<AsNumber> = topo.asns().collect();
    let mut state: BTreeMap<AsNumber, OracleRoute> = BTreeMap::new();
    for (i, o) in origins.iter().enumerate() {
        state.insert(
            *o,
            OracleRoute {
                class: Class::Origin,
                length: 0,
                origin: i,
                paths: BTreeSet::from([vec![*o]]),
            },
        );
    }
    for _round in 0..500 {
        let mut next = state.clone();
        for &me in &nodes {
            if origins.contains(&me) {
                continue;
            }
            let mut best: Option<OracleRoute> = None;
            for &nb in &nodes {
                let Some(class) = class_via(topo, me, nb) else {
                    continue;
                };
                let Some(theirs) = state.get(&nb) else {
                    continue;
                };
                // Export rule: a provider exports everything to its customers;
                // otherwise only origin and customer routes are exported.
                let exported = class == Class::Provider
                    || matches!(theirs.class, Class::Origin | Class::Customer);
                if !exported {
                    continue;
                }
                for p in &theirs.paths {
                    if p.contains(&me) {
                        continue;
                    }
                    let mut path = vec![me];
                    path.extend(p.iter().copied());
                    let cand = (class, path.len() - 1, theirs.origin);
                    match &mut best {
                        None => {
                            best = Some(OracleRoute {
                                class,
                                length: cand.1,
                                origin: cand.2,
                                paths: BTreeSet::from([path]),
                            })
                        }
                        Some(b) => {
                            let cur = (b.class, b.length, b.origin);
                            if cand < cur {
                                *b = OracleRoute {
                                    class,
                                    length: cand.1,
                                    origin: cand.2,
                                    paths: BTreeSet::from([path]),
                                };
                            } else if cand == cur {
                                b.paths.insert(path);
                            }
                        }
                    }
                }
            }
            match best {
                Some(b) => {
                    next.insert(me, b);
                }
                None => {
                    next.remove(&me);
                }
            }
        }
        if next == state {
            return state;
        }
        state = next;
    }
    panic!("convergence oracle did not reach a fixed point");
}

/// Independent valley-free path check: up* peer? down*.
pub fn is_valley_free(topo: &AsTopology, path: &[AsNumber]) -> bool {
    let mut descending = false;
    for w in path.windows(2) {
        match class_via(topo, w[0], w[1]) {
            None => return false,
            Some(Class::Provider) => {
                if descending {
                    return false;
                }
            }
            Some(Class::Peer) => {
                if descending {
                    return false;
                }
                descending = true;
            }
            Some(Class::Customer) => descending = true,
            Some(Class::Origin) => unreachable!(),
        }
    }
    true
}

/// Oracle hijack decision: does `source` route toward `attacker` once the
/// attacker also originates the victim's prefix?
pub fn oracle_hijack(topo: &AsTopology, attacker: AsNumber, source: AsNumber, victim: AsNumber) -> bool {
    if source == victim {
        return false;
    }
    let state = converge(topo, &[attacker, victim]);
    state.get(&source).map(|r| r.origin == 0).unwrap_or(false)
}

/// Oracle interception decision: hijack succeeds and some neighbor the attacker
/// can still learn an un-captured route from keeps a route to the victim.
pub fn oracle_intercept(
    topo: &AsTopology,
    attacker: AsNumber,
    source: AsNumber,
    victim: AsNumber,
) -> bool {
    if !oracle_hijack(topo, attacker, source, victim) {
        return false;
    }
    let state = converge(topo, &[attacker, victim]);
    topo.asns().any(|nb| {
        let Some(class) = class_via(topo, attacker, nb) else {
            return false;
        };
        let Some(theirs) = state.get(&nb) else {
            return false;
        };
        theirs.origin == 1
            && (class == Class::Provider || matches!(theirs.class, Class::Origin | Class::Customer))
    })
}

pub fn linear_scan_lpm(entries: &[(Prefix, AsNumber)], ip: Ipv4Addr) -> Option<AsNumber> {
    let mut best: Option<(u8, AsNumber)> = None;
    for (prefix, origin) in entries {
        let m = if prefix.len() == 0 {
            0
        } else {
            u32::MAX << (32 - u32::from(prefix.len()))
        };
        if u32::from(ip) & m == u32::from(prefix.network()) {
            if best.map(|(l, _)| prefix.len() > l).unwrap_or(true) {
                best = Some((prefix.len(), *origin));
            }
        }
    }
    best.map(|(_, o)| o)
}

/// All simple paths from `src` to `dst` over directed `edges`, by plain DFS.
pub fn all_simple_paths(
    edges: &[(AsNumber, AsNumber)],
    src: AsNumber,
    dst: AsNumber,
) -> BTreeSet<Vec<AsNumber>> {
    fn dfs(
        edges: &[(AsNumber, AsNumber)],
        dst: AsNumber,
        stack: &mut Vec<AsNumber>,
        out: &mut BTreeSet<Vec<AsNumber>>,
    ) {
        let cur = *stack.last().unwrap();
        if cur == dst {
            out.insert(stack.clone());
            return;
        }
        for (f, t) in edges {
            if *f == cur && !stack.contains(t) {
                stack.push(*t);
                dfs(edges, dst, stack, out);
                stack.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    dfs(edges, dst, &mut vec![src], &mut out);
    out
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}
