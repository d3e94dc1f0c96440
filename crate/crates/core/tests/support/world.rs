// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! Small synthetic relay networks on a two-level topology.
//!
//! Transit ASes 1..=k sit at the top and are not connected to each other. The
//! client (AS 100) is a customer of every transit. Guards (AS 200+i), exits
//! (AS 300+j), middles (AS 400+m) and destinations (AS 500+d) are stubs under
//! the transits listed for them. Every path is then two hops through a shared
//! transit, and all equal-length alternatives are kept, so the ASes on a
//! client-guard path are the guard's transits, and those on an exit-destination
//! path are the transits the two have in common.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use chrono::{DateTime, Utc};
use cipollino::topology::{asn, AsNumber, AsRelationship, AsTopology, Prefix, RelationshipKind};
use cipollino::tor::{ConsensusSnapshot, ExitPolicy, Relay, RelayFlags};

pub const CLIENT: u32 = 100;

#[derive(Debug, Clone)]
pub struct RelaySpec {
    pub transits: Vec<u32>,
    pub bw: u64,
    pub policy: ExitPolicy,
    pub family: Option<String>,
}

impl RelaySpec {
    pub fn new(transits: &[u32], bw: u64) -> Self {
        RelaySpec {
            transits: transits.to_vec(),
            bw,
            policy: ExitPolicy::accept_all(),
            family: None,
        }
    }

    pub fn policy(mut self, policy: ExitPolicy) -> Self {
        self.policy = policy;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct WorldSpec {
    pub transits: u32,
    pub guards: Vec<RelaySpec>,
    pub exits: Vec<RelaySpec>,
    pub middles: Vec<RelaySpec>,
    pub dests: Vec<Vec<u32>>,
}

pub struct World {
    pub spec: WorldSpec,
    pub topo: AsTopology,
    pub snapshot: ConsensusSnapshot,
}

pub fn guard_as(i: usize) -> u32 {
    200 + i as u32
}

pub fn exit_as(j: usize) -> u32 {
    300 + j as u32
}

pub fn middle_as(m: usize) -> u32 {
    400 + m as u32
}

pub fn dest_as(d: usize) -> u32 {
    500 + d as u32
}

/// The /16 announced by AS `a`.
pub fn prefix_of(a: u32) -> Prefix {
    Prefix::new(Ipv4Addr::new(30 + (a / 256) as u8, (a % 256) as u8, 0, 0), 16).unwrap()
}

pub fn host(a: u32, last: u8) -> Ipv4Addr {
    let o = prefix_of(a).network().octets();
    Ipv4Addr::new(o[0], o[1], 1, last)
}

pub fn dest_ip(d: usize) -> Ipv4Addr {
    host(dest_as(d), 10)
}

impl World {
    pub fn build(spec: WorldSpec) -> World {
        let mut b = AsTopology::builder();
        let pc = |b: &mut cipollino::topology::TopologyBuilder, p: u32, c: u32| {
            b.add_relationship(AsRelationship {
                a: asn(p),
                b: asn(c),
                kind: RelationshipKind::ProviderToCustomer,
            })
            .unwrap();
        };
        for t in 1..=spec.transits {
            pc(&mut b, t, CLIENT);
        }
        b.add_prefix(prefix_of(CLIENT), asn(CLIENT));
        let groups: [(&Vec<RelaySpec>, fn(usize) -> u32); 3] =
            [(&spec.guards, guard_as), (&spec.exits, exit_as), (&spec.middles, middle_as)];
        for (relays, as_of) in groups {
            for (i, r) in relays.iter().enumerate() {
                for &t in &r.transits {
                    pc(&mut b, t, as_of(i));
                }
                b.add_prefix(prefix_of(as_of(i)), asn(as_of(i)));
            }
        }
        for (d, ts) in spec.dests.iter().enumerate() {
            for &t in ts {
                pc(&mut b, t, dest_as(d));
            }
            b.add_prefix(prefix_of(dest_as(d)), asn(dest_as(d)));
        }
        let topo = b.build();

        let mut relays = Vec::new();
        let kinds: [(&Vec<RelaySpec>, fn(usize) -> u32, &str, RelayFlags); 3] = [
            (&spec.guards, guard_as, "G", RelayFlags::GUARD | RelayFlags::FAST),
            (&spec.exits, exit_as, "E", RelayFlags::EXIT | RelayFlags::FAST),
            (&spec.middles, middle_as, "M", RelayFlags::FAST),
        ];
        for (group, as_of, tag, flags) in kinds {
            for (i, r) in group.iter().enumerate() {
                let a = as_of(i);
                relays.push(Relay {
                    fingerprint: format!("{tag}{i}"),
                    address: host(a, 1),
                    asn: Some(asn(a)),
                    prefix: Some(prefix_of(a)),
                    bandwidth: r.bw,
                    flags,
                    family: r.family.clone(),
                    exit_policy: if tag == "E" { r.policy.clone() } else { ExitPolicy::reject_all() },
                });
            }
        }
        let snapshot = ConsensusSnapshot::new(DateTime::<Utc>::UNIX_EPOCH, relays).unwrap();
        World { spec, topo, snapshot }
    }

    pub fn client(&self) -> AsNumber {
        asn(CLIENT)
    }

    fn transits_of(&self, fp: &str) -> BTreeSet<u32> {
        let (tag, idx) = fp.split_at(1);
        let i: usize = idx.parse().unwrap();
        let spec = match tag {
            "G" => &self.spec.guards[i],
            "E" => &self.spec.exits[i],
            _ => &self.spec.middles[i],
        };
        spec.transits.iter().copied().collect()
    }

    /// ASes seen between the client and `guard_fp`, in either direction.
    pub fn expected_src_en(&self, guard_fp: &str) -> BTreeSet<AsNumber> {
        let i: usize = guard_fp[1..].parse().unwrap();
        let mut out: BTreeSet<AsNumber> = self.transits_of(guard_fp).into_iter().map(asn).collect();
        out.extend([asn(CLIENT), asn(guard_as(i))]);
        out
    }

    /// ASes seen between `exit_fp` and destination `d`, in either direction.
    pub fn expected_ex_dst(&self, exit_fp: &str, d: usize) -> BTreeSet<AsNumber> {
        let j: usize = exit_fp[1..].parse().unwrap();
        let dest: BTreeSet<u32> = self.spec.dests[d].iter().copied().collect();
        let mut out: BTreeSet<AsNumber> = self.transits_of(exit_fp).intersection(&dest).copied().map(asn).collect();
        out.extend([asn(exit_as(j)), asn(dest_as(d))]);
        out
    }

    pub fn expected_safe(&self, guard_fp: &str, exit_fp: &str, d: usize) -> bool {
        self.expected_src_en(guard_fp).is_disjoint(&self.expected_ex_dst(exit_fp, d))
    }
}
