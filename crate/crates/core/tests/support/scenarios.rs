// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! Replay scenarios shared by the simulation tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use cipollino::client::ConnectionRequest;
use cipollino::pathcache::{DestinationGraph, EdgeProvenance, EdgeSource, GraphEdge, GraphUpdateBundle};
use cipollino::sim::{SimInputs, WorkloadKind, WorkloadStream};
use cipollino::topology::{asn, AsNumber, AsRelationship, AsTopology, Prefix, RelationshipKind};
use cipollino::tor::{AddressPattern, ConsensusSnapshot, ExitPolicy, PolicyAction, PolicyRule};
use rand::seq::IndexedRandom;
use rand::Rng;

use super::world::{dest_ip, exit_as, guard_as, RelaySpec, World, WorldSpec, CLIENT};

pub fn request(d: usize, port: u16, at_secs: i64) -> ConnectionRequest {
    ConnectionRequest::new(DateTime::<Utc>::UNIX_EPOCH + Duration::seconds(at_secs), dest_ip(d), port.into(), asn(CLIENT))
        .unwrap()
}

/// Requests `(destination, port)` spaced `gap_secs` apart.
pub fn workload(requests: &[(usize, u16)], gap_secs: i64) -> WorkloadStream {
    let reqs = requests
        .iter()
        .enumerate()
        .map(|(i, &(d, port))| request(d, port, i as i64 * gap_secs))
        .collect();
    WorkloadStream::new(reqs, WorkloadKind::Web).unwrap()
}

pub fn inputs<'a>(world: &'a World, bundle: &'a GraphUpdateBundle) -> SimInputs<'a> {
    SimInputs {
        snapshot: &world.snapshot,
        bundle,
        topology: &world.topo,
        alerts: &[],
    }
}

pub fn only_ports(ports: &[u16]) -> ExitPolicy {
    let mut rules: Vec<PolicyRule> = ports
        .iter()
        .map(|&p| PolicyRule::new(PolicyAction::Accept, AddressPattern::Any, p.into(), p.into()).unwrap())
        .collect();
    rules.push(PolicyRule::new(PolicyAction::Reject, AddressPattern::Any, 1, 65535).unwrap());
    ExitPolicy::new(rules)
}

pub fn measured(from: u32, to: u32) -> GraphEdge {
    GraphEdge {
        from: asn(from),
        to: asn(to),
        provenance: EdgeProvenance {
            source: EdgeSource::TracerouteAtlas,
            measurement_id: format!("m-{from}-{to}"),
        },
    }
}

pub fn bundle_of(graphs: Vec<(u32, Vec<(u32, u32)>)>) -> GraphUpdateBundle {
    let graphs = graphs.into_iter().map(|(dst, edges)| {
        DestinationGraph::new(asn(dst), edges.into_iter().map(|(a, b)| measured(a, b)).collect()).unwrap()
    });
    GraphUpdateBundle::new(DateTime::<Utc>::UNIX_EPOCH, "scenario", graphs).unwrap()
}

/// One guard under T1. E0 under T1 exits only to 443, E1 under T2 only to 80.
/// The destination sits under both transits, so 443 traffic always shares T1
/// with the entry side and 80 traffic never does. Nine requests go to 443,
/// then one to 80.
pub fn amplification() -> (World, WorkloadStream) {
    let world = World::build(WorldSpec {
        transits: 3,
        guards: vec![RelaySpec::new(&[1], 100)],
        exits: vec![
            RelaySpec::new(&[1], 100).policy(only_ports(&[443])),
            RelaySpec::new(&[2], 100).policy(only_ports(&[80])),
        ],
        middles: vec![RelaySpec::new(&[3], 100), RelaySpec::new(&[3], 100)],
        dests: vec![vec![1, 2]],
    });
    let mut reqs = vec![(0, 443); 9];
    reqs.push((0, 80));
    (world, workload(&reqs, 10))
}

/// Every destination admits a safe pair, but the heavy exits share a transit
/// with every guard, so bandwidth-weighted choices are mostly unsafe.
pub fn defense_world(rng: &mut impl Rng, dests: usize) -> World {
    let guards = (0..4).map(|i| RelaySpec::new(&[1 + (i % 2) as u32], rng.random_range(50..150))).collect();
    let mut exits: Vec<RelaySpec> = (0..4).map(|_| RelaySpec::new(&[1, 2], rng.random_range(500..1000))).collect();
    exits.push(RelaySpec::new(&[3], 10));
    exits.push(RelaySpec::new(&[4], 10));
    let middles = (0..3).map(|_| RelaySpec::new(&[5], 100)).collect();
    let dests = (0..dests)
        .map(|_| vec![*[1u32, 2].choose(rng).unwrap(), *[3u32, 4].choose(rng).unwrap()])
        .collect();
    World::build(WorldSpec {
        transits: 5,
        guards,
        exits,
        middles,
        dests,
    })
}

/// The guard is reached over T1 and answers over T2; the exit and the
/// destination meet at T2. Only the reverse path reveals the shared AS.
pub fn asymmetric() -> (World, GraphUpdateBundle) {
    let world = World::build(WorldSpec {
        transits: 3,
        guards: vec![RelaySpec::new(&[1, 2], 100)],
        exits: vec![RelaySpec::new(&[2], 100)],
        middles: vec![RelaySpec::new(&[3], 100)],
        dests: vec![vec![2]],
    });
    let g = guard_as(0);
    let bundle = bundle_of(vec![(g, vec![(CLIENT, 1), (1, g)]), (CLIENT, vec![(g, 2), (2, CLIENT)])]);
    (world, bundle)
}

/// Random multi-homed relays with measured paths that may differ by direction.
pub fn random_asymmetric(rng: &mut impl Rng) -> (World, GraphUpdateBundle) {
    let transits = 4u32;
    let homes = |rng: &mut dyn rand::RngCore| {
        let mut ts: Vec<u32> = (1..=transits).filter(|_| rng.random_bool(0.5)).collect();
        if ts.is_empty() {
            ts.push(rng.random_range(1..=transits));
        }
        ts
    };
    let spec = WorldSpec {
        transits,
        guards: (0..3).map(|_| RelaySpec::new(&homes(rng), rng.random_range(1..100))).collect(),
        exits: (0..3).map(|_| RelaySpec::new(&homes(rng), rng.random_range(1..100))).collect(),
        middles: (0..2).map(|_| RelaySpec::new(&homes(rng), rng.random_range(1..100))).collect(),
        dests: (0..3).map(|_| homes(rng)).collect(),
    };
    let mut graphs = Vec::new();
    let mut back = Vec::new();
    for (i, g) in spec.guards.iter().enumerate() {
        let a = guard_as(i);
        if rng.random_bool(0.7) {
            let t = *g.transits.choose(rng).unwrap();
            graphs.push((a, vec![(CLIENT, t), (t, a)]));
        }
        if rng.random_bool(0.7) {
            let t = *g.transits.choose(rng).unwrap();
            back.extend([(a, t), (t, CLIENT)]);
        }
    }
    for (j, e) in spec.exits.iter().enumerate() {
        if rng.random_bool(0.5) {
            let a = exit_as(j);
            let t = *e.transits.choose(rng).unwrap();
            graphs.push((a, vec![(CLIENT, t), (t, a)]));
        }
    }
    back.sort();
    back.dedup();
    if !back.is_empty() {
        graphs.push((CLIENT, back));
    }
    (World::build(spec), bundle_of(graphs))
}

/// The 200-relay consensus fixture placed on a generated topology: eight
/// peering transits, every relay /16 its own stub AS, plus `dests` destination
/// stubs. Returns the topology, the snapshot, and site/DNS tables for a web
/// workload of `sites` sites with `per_site` endpoints each.
pub fn relay_fixture(rng: &mut impl Rng, dests: u32, sites: usize, per_site: usize) -> (AsTopology, ConsensusSnapshot, String, String) {
    let mut b = AsTopology::builder();
    let rel = |b: &mut cipollino::topology::TopologyBuilder, a: u32, c: u32, kind| {
        b.add_relationship(AsRelationship {
            a: asn(a),
            b: asn(c),
            kind,
        })
        .unwrap();
    };
    let transits = 8u32;
    for t in 1..=transits {
        for u in t + 1..=transits {
            rel(&mut b, t, u, RelationshipKind::PeerToPeer);
        }
    }
    let stub = |b: &mut cipollino::topology::TopologyBuilder, a: u32, prefix: Prefix, rng: &mut dyn rand::RngCore| {
        let first = rng.random_range(1..=transits);
        rel(b, first, a, RelationshipKind::ProviderToCustomer);
        if rng.random_bool(0.4) {
            let second = rng.random_range(1..=transits);
            if second != first {
                rel(b, second, a, RelationshipKind::ProviderToCustomer);
            }
        }
        b.add_prefix(prefix, asn(a));
    };
    rel(&mut b, 1, CLIENT, RelationshipKind::ProviderToCustomer);
    rel(&mut b, 2, CLIENT, RelationshipKind::ProviderToCustomer);
    b.add_prefix(Prefix::new(Ipv4Addr::new(60, 0, 0, 0), 16).unwrap(), asn(CLIENT));
    for i in 0..200u32 {
        stub(&mut b, 1000 + i, Prefix::new(Ipv4Addr::new(20, i as u8, 0, 0), 16).unwrap(), rng);
    }
    for d in 0..dests {
        stub(&mut b, 2000 + d, Prefix::new(Ipv4Addr::new(50, d as u8, 0, 0), 16).unwrap(), rng);
    }
    let topo = b.build();
    let consensus = std::fs::File::open(super::fixture("consensus_200.jsonl")).unwrap();
    let snapshot = cipollino::tor::load_consensus(consensus, &topo).unwrap();

    let mut site_csv = String::from("site,rank\n");
    let mut dns_csv = String::from("site,ip,port\n");
    for s in 0..sites {
        writeln!(site_csv, "site{s}.example,{}", s + 1).unwrap();
        for _ in 0..per_site {
            let d = rng.random_range(0..dests);
            let port = if rng.random_bool(0.7) { 443 } else { 80 };
            writeln!(dns_csv, "site{s}.example,50.{d}.{}.{},{port}", rng.random_range(0..256), rng.random_range(1..255)).unwrap();
        }
    }
    (topo, snapshot, site_csv, dns_csv)
}

/// Paths of the files written by [`write_world`].
pub struct WorldFiles {
    pub topology: PathBuf,
    pub prefixes: PathBuf,
    pub consensus: PathBuf,
}

/// Serialises a world in the on-disk input formats.
pub fn write_world(world: &World, dir: &Path) -> WorldFiles {
    let mut rels = String::new();
    for r in world.topo.relationships() {
        let code = match r.kind {
            RelationshipKind::ProviderToCustomer => -1,
            RelationshipKind::PeerToPeer => 0,
        };
        writeln!(rels, "{}|{}|{code}", r.a, r.b).unwrap();
    }
    let mut prefixes = String::new();
    for a in world.topo.asns() {
        for p in world.topo.prefixes_of(a) {
            writeln!(prefixes, "{p}|{a}").unwrap();
        }
    }
    let mut consensus = String::from("{\"valid_at\":\"1970-01-01T00:00:00Z\"}\n");
    for r in world.snapshot.relays() {
        let mut flags = Vec::new();
        if r.is_guard() {
            flags.push("Guard");
        }
        if r.is_exit() {
            flags.push("Exit");
        }
        flags.push("Fast");
        let policy: Vec<serde_json::Value> = r
            .exit_policy
            .rules()
            .iter()
            .map(|rule| {
                let action = match rule.action {
                    PolicyAction::Accept => "accept",
                    PolicyAction::Reject => "reject",
                };
                let pattern = match rule.address {
                    AddressPattern::Any => "*".to_string(),
                    AddressPattern::Network(p) => p.to_string(),
                };
                serde_json::json!([action, pattern, rule.ports.0, rule.ports.1])
            })
            .collect();
        let rec = serde_json::json!({
            "fp": r.fingerprint,
            "ip": r.address.to_string(),
            "bw": r.bandwidth,
            "flags": flags,
            "family": r.family,
            "policy": policy,
        });
        writeln!(consensus, "{rec}").unwrap();
    }
    let files = WorldFiles {
        topology: dir.join("topology.rels"),
        prefixes: dir.join("prefixes.txt"),
        consensus: dir.join("consensus.jsonl"),
    };
    std::fs::write(&files.topology, rels).unwrap();
    std::fs::write(&files.prefixes, prefixes).unwrap();
    std::fs::write(&files.consensus, consensus).unwrap();
    files
}

/// Random topology with truth paths and a bundle measured from them.
///
/// Truth paths are the shortest valley-free walks found by brute force. Even
/// destinations get a measured graph built from the truth paths toward them.
pub fn truth_fixture(rng: &mut impl Rng, n: u32) -> (AsTopology, GraphUpdateBundle, String) {
    let topo = super::random_topology(rng, n, 0.35, 0.15);
    let asns: Vec<AsNumber> = topo.asns().collect();
    let edges: Vec<(AsNumber, AsNumber)> = topo.relationships().flat_map(|e| [(e.a, e.b), (e.b, e.a)]).collect();
    let mut truth = String::from("src_asn,dst_asn,path\n");
    let mut graphs = Vec::new();
    for &dst in &asns {
        let mut used: BTreeSet<(AsNumber, AsNumber)> = BTreeSet::new();
        for &src in &asns {
            if src == dst {
                continue;
            }
            let paths = super::all_simple_paths(&edges, src, dst);
            let Some(best) = paths.iter().filter(|p| super::is_valley_free(&topo, p)).min_by_key(|p| p.len()) else {
                continue;
            };
            let hops: Vec<String> = best.iter().map(|a| a.to_string()).collect();
            writeln!(truth, "{src},{dst},{}", hops.join("-")).unwrap();
            used.extend(best.windows(2).map(|w| (w[0], w[1])));
        }
        if u32::from(dst) % 2 == 0 && !used.is_empty() {
            let edges = used.iter().map(|&(a, b)| measured(a.into(), b.into())).collect();
            // Unions of shortest walks can loop; such destinations stay unmeasured.
            if let Ok(g) = DestinationGraph::new(dst, edges) {
                graphs.push(g);
            }
        }
    }
    let bundle = GraphUpdateBundle::new(DateTime::UNIX_EPOCH, "truth", graphs).unwrap();
    (topo, bundle, truth)
}
