// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! AS-level topology: CAIDA-style relationship data, the prefix-to-origin table,
//! and Gao-Rexford route simulation over both.

mod prefix_table;
mod routing;
mod types;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read};
use std::net::Ipv4Addr;

pub use prefix_table::PrefixTable;
pub use routing::{enumerate_valley_free_paths, RouteClass, RoutingTree, MAX_ENUMERATION_LEN};
pub use types::{asn, AsNumber, AsPath, AsRelationship, Prefix, RelationshipKind};

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("{source_name} line {line}: {message}")]
    Parse {
        source_name: &'static str,
        line: usize,
        message: String,
    },
    #[error("conflicting relationship between AS{a} and AS{b} ({source_name} line {line})")]
    Conflict {
        a: AsNumber,
        b: AsNumber,
        source_name: &'static str,
        line: usize,
    },
    #[error("AS{0} cannot have a relationship with itself")]
    SelfLoop(AsNumber),
    #[error("AS{0} is not present in the topology")]
    UnknownAs(AsNumber),
    #[error("max_len {0} exceeds the enumeration bound of {MAX_ENUMERATION_LEN}")]
    EnumerationBound(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Neighbors {
    pub providers: BTreeSet<AsNumber>,
    pub customers: BTreeSet<AsNumber>,
    pub peers: BTreeSet<AsNumber>,
}

impl Neighbors {
    fn is_empty(&self) -> bool {
        self.providers.is_empty() && self.customers.is_empty() && self.peers.is_empty()
    }
}

/// An annotated AS graph plus the prefix table. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct AsTopology {
    nodes: BTreeMap<AsNumber, Neighbors>,
    relationships: BTreeMap<(AsNumber, AsNumber), AsRelationship>,
    prefix_table: PrefixTable,
    origin_prefixes: BTreeMap<AsNumber, Vec<Prefix>>,
}

impl AsTopology {
    pub fn builder() -> TopologyBuilder {
        TopologyBuilder::default()
    }

    pub fn contains(&self, asn: AsNumber) -> bool {
        self.nodes.contains_key(&asn)
    }

    pub fn asns(&self) -> impl Iterator<Item = AsNumber> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn relationships(&self) -> impl Iterator<Item = &AsRelationship> {
        self.relationships.values()
    }

    pub fn edge_count(&self) -> usize {
        self.relationships.len()
    }

    pub fn relationship(&self, a: AsNumber, b: AsNumber) -> Option<AsRelationship> {
        self.relationships.get(&unordered(a, b)).copied()
    }

    pub fn providers_of(&self, asn: AsNumber) -> impl Iterator<Item = AsNumber> + '_ {
        self.nodes.get(&asn).into_iter().flat_map(|n| n.providers.iter().copied())
    }

    pub fn customers_of(&self, asn: AsNumber) -> impl Iterator<Item = AsNumber> + '_ {
        self.nodes.get(&asn).into_iter().flat_map(|n| n.customers.iter().copied())
    }

    pub fn peers_of(&self, asn: AsNumber) -> impl Iterator<Item = AsNumber> + '_ {
        self.nodes.get(&asn).into_iter().flat_map(|n| n.peers.iter().copied())
    }

    pub(crate) fn neighbors(&self, asn: AsNumber) -> Option<&Neighbors> {
        self.nodes.get(&asn)
    }

    pub fn prefix_table(&self) -> &PrefixTable {
        &self.prefix_table
    }

    /// Origin ASes from the prefix table with no relationship edges.
    ///
    /// These are known to the topology but unreachable by simulation.
    pub fn unattached_origins(&self) -> BTreeSet<AsNumber> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.is_empty())
            .map(|(a, _)| *a)
            .collect()
    }

    pub fn ip_to_asn(&self, ip: Ipv4Addr) -> Option<AsNumber> {
        self.prefix_table.longest_match(ip).map(|(_, origin)| origin)
    }

    pub fn lookup(&self, ip: Ipv4Addr) -> Option<(Prefix, AsNumber)> {
        self.prefix_table.longest_match(ip)
    }

    /// Every prefix in the table whose origin is `asn`, in address order.
    pub fn prefixes_of(&self, asn: AsNumber) -> &[Prefix] {
        self.origin_prefixes.get(&asn).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn registered_origin(&self, prefix: &Prefix) -> Option<AsNumber> {
        self.prefix_table.get(prefix)
    }

    /// All equally most-preferred Gao-Rexford paths from `src` to `dst`.
    pub fn simulate_route(
        &self,
        src: AsNumber,
        dst: AsNumber,
    ) -> Result<BTreeSet<AsPath>, TopologyError> {
        self.require(src)?;
        let tree = self.routing_tree(dst)?;
        Ok(tree.paths_from(src))
    }

    /// Union of ASes over [`AsTopology::simulate_route`] without materialising the paths.
    pub fn simulate_route_ases(
        &self,
        src: AsNumber,
        dst: AsNumber,
    ) -> Result<BTreeSet<AsNumber>, TopologyError> {
        self.require(src)?;
        let tree = self.routing_tree(dst)?;
        Ok(tree.ases_from(src))
    }

    pub fn routing_tree(&self, dst: AsNumber) -> Result<RoutingTree, TopologyError> {
        self.require(dst)?;
        Ok(RoutingTree::compute(self, &[dst]))
    }

    pub(crate) fn require(&self, asn: AsNumber) -> Result<(), TopologyError> {
        if self.contains(asn) {
            Ok(())
        } else {
            Err(TopologyError::UnknownAs(asn))
        }
    }
}

fn unordered(a: AsNumber, b: AsNumber) -> (AsNumber, AsNumber) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Default)]
pub struct TopologyBuilder {
    topology: AsTopology,
}

impl TopologyBuilder {
    pub fn provider_customer(self, provider: u32, customer: u32) -> Self {
        self.with(provider, customer, RelationshipKind::ProviderToCustomer)
    }

    pub fn peers(self, a: u32, b: u32) -> Self {
        self.with(a, b, RelationshipKind::PeerToPeer)
    }

    fn with(mut self, a: u32, b: u32, kind: RelationshipKind) -> Self {
        self.add_relationship(AsRelationship { a: asn(a), b: asn(b), kind })
            .expect("fixture relationship must be consistent");
        self
    }

    pub fn prefix(mut self, prefix: &str, origin: u32) -> Self {
        let prefix: Prefix = prefix.parse().expect("fixture prefix must parse");
        self.add_prefix(prefix, asn(origin));
        self
    }

    pub fn node(mut self, value: u32) -> Self {
        self.add_node(asn(value));
        self
    }

    /// Adds an edge. Exact duplicates are ignored; any other relationship already
    /// recorded for the pair is a conflict.
    pub fn add_relationship(&mut self, rel: AsRelationship) -> Result<bool, TopologyError> {
        if rel.a == rel.b {
            return Err(TopologyError::SelfLoop(rel.a));
        }
        let key = unordered(rel.a, rel.b);
        if let Some(existing) = self.topology.relationships.get(&key) {
            let same = existing.kind == rel.kind
                && (rel.kind == RelationshipKind::PeerToPeer || existing.a == rel.a);
            return if same {
                Ok(false)
            } else {
                Err(TopologyError::Conflict {
                    a: rel.a,
                    b: rel.b,
                    source_name: "relationships",
                    line: 0,
                })
            };
        }
        let nodes = &mut self.topology.nodes;
        match rel.kind {
            RelationshipKind::ProviderToCustomer => {
                nodes.entry(rel.a).or_default().customers.insert(rel.b);
                nodes.entry(rel.b).or_default().providers.insert(rel.a);
            }
            RelationshipKind::PeerToPeer => {
                nodes.entry(rel.a).or_default().peers.insert(rel.b);
                nodes.entry(rel.b).or_default().peers.insert(rel.a);
            }
        }
        self.topology.relationships.insert(key, rel);
        Ok(true)
    }

    /// Returns the previous origin, if the prefix was already present.
    pub fn add_prefix(&mut self, prefix: Prefix, origin: AsNumber) -> Option<AsNumber> {
        self.topology.nodes.entry(origin).or_default();
        self.topology.prefix_table.insert(prefix, origin)
    }

    pub fn add_node(&mut self, asn: AsNumber) {
        self.topology.nodes.entry(asn).or_default();
    }

    pub fn build(mut self) -> AsTopology {
        self.topology.origin_prefixes = self.topology.prefix_table.prefixes_by_origin();
        self.topology
    }
}

fn data_lines(reader: impl Read) -> impl Iterator<Item = Result<(usize, String), TopologyError>> {
    BufReader::new(reader)
        .lines()
        .enumerate()
        .filter_map(|(idx, line)| match line {
            Err(e) => Some(Err(TopologyError::Io(e))),
            Ok(line) => {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    None
                } else {
                    Some(Ok((idx + 1, trimmed.to_string())))
                }
            }
        })
}

fn parse_err(source_name: &'static str, line: usize, message: impl Into<String>) -> TopologyError {
    TopologyError::Parse {
        source_name,
        line,
        message: message.into(),
    }
}

/// Parses `<asn1>|<asn2>|<rel>` lines; `-1` means asn1 is a provider of asn2, `0` peers.
/// Trailing fields (such as the CAIDA source column) are ignored.
pub fn parse_relationships(
    builder: &mut TopologyBuilder,
    reader: impl Read,
) -> Result<(), TopologyError> {
    const NAME: &str = "relationships";
    for item in data_lines(reader) {
        let (line_no, line) = item?;
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(parse_err(NAME, line_no, format!("expected 3 fields in {line:?}")));
        }
        let a: AsNumber = fields[0].parse().map_err(|e| parse_err(NAME, line_no, e))?;
        let b: AsNumber = fields[1].parse().map_err(|e| parse_err(NAME, line_no, e))?;
        let kind = match fields[2] {
            "-1" => RelationshipKind::ProviderToCustomer,
            "0" => RelationshipKind::PeerToPeer,
            other => {
                return Err(parse_err(NAME, line_no, format!("unknown relationship {other:?}")))
            }
        };
        builder
            .add_relationship(AsRelationship { a, b, kind })
            .map_err(|e| match e {
                TopologyError::Conflict { a, b, .. } => TopologyError::Conflict {
                    a,
                    b,
                    source_name: NAME,
                    line: line_no,
                },
                TopologyError::SelfLoop(_) => {
                    parse_err(NAME, line_no, format!("self relationship for AS{a}"))
                }
                other => other,
            })?;
    }
    Ok(())
}

/// Parses `<a.b.c.d/len>|<asn>` lines.
pub fn parse_prefixes(builder: &mut TopologyBuilder, reader: impl Read) -> Result<(), TopologyError> {
    const NAME: &str = "prefixes";
    for item in data_lines(reader) {
        let (line_no, line) = item?;
        let (prefix, origin) = line
            .split_once('|')
            .ok_or_else(|| parse_err(NAME, line_no, format!("expected <prefix>|<asn> in {line:?}")))?;
        let prefix: Prefix = prefix.parse().map_err(|e| parse_err(NAME, line_no, e))?;
        let origin: AsNumber = origin.parse().map_err(|e| parse_err(NAME, line_no, e))?;
        if let Some(previous) = builder.add_prefix(prefix, origin) {
            if previous != origin {
                return Err(TopologyError::Conflict {
                    a: previous,
                    b: origin,
                    source_name: NAME,
                    line: line_no,
                });
            }
        }
    }
    Ok(())
}

/// Parses `<stub_asn>|<provider_asn>` lines, attaching each stub below its provider.
pub fn parse_stubs(builder: &mut TopologyBuilder, reader: impl Read) -> Result<(), TopologyError> {
    const NAME: &str = "stubs";
    for item in data_lines(reader) {
        let (line_no, line) = item?;
        let (stub, provider) = line
            .split_once('|')
            .ok_or_else(|| parse_err(NAME, line_no, format!("expected <stub>|<provider> in {line:?}")))?;
        let stub: AsNumber = stub.parse().map_err(|e| parse_err(NAME, line_no, e))?;
        let provider: AsNumber = provider.parse().map_err(|e| parse_err(NAME, line_no, e))?;
        builder
            .add_relationship(AsRelationship {
                a: provider,
                b: stub,
                kind: RelationshipKind::ProviderToCustomer,
            })
            .map_err(|e| match e {
                TopologyError::Conflict { a, b, .. } => TopologyError::Conflict {
                    a,
                    b,
                    source_name: NAME,
                    line: line_no,
                },
                other => other,
            })?;
    }
    Ok(())
}

pub fn load_topology(relationships: impl Read, prefixes: impl Read) -> Result<AsTopology, TopologyError> {
    load_topology_with_stubs(relationships, prefixes, None::<&[u8]>)
}

pub fn load_topology_with_stubs(
    relationships: impl Read,
    prefixes: impl Read,
    stubs: Option<impl Read>,
) -> Result<AsTopology, TopologyError> {
    let mut builder = AsTopology::builder();
    parse_relationships(&mut builder, relationships)?;
    parse_prefixes(&mut builder, prefixes)?;
    if let Some(stubs) = stubs {
        parse_stubs(&mut builder, stubs)?;
    }
    Ok(builder.build())
}
