// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::topology::AsNumber;

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("bundle line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bundle is missing its header record")]
    MissingHeader,
    #[error("destination graph for AS{dst} is invalid: {reason}")]
    Integrity { dst: AsNumber, reason: String },
    #[error("bundle contains more than one graph for AS{0}")]
    DuplicateGraph(AsNumber),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeSource {
    #[serde(rename = "atlas")]
    TracerouteAtlas,
    #[serde(rename = "ark")]
    TracerouteArk,
    #[serde(rename = "iplane")]
    TracerouteIplane,
    #[serde(rename = "bgp")]
    ControlPlaneBgp,
    #[serde(rename = "simulated")]
    Simulated,
}

impl EdgeSource {
    pub fn is_measured(self) -> bool {
        self != EdgeSource::Simulated
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeProvenance {
    pub source: EdgeSource,
    pub measurement_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphEdge {
    pub from: AsNumber,
    pub to: AsNumber,
    pub provenance: EdgeProvenance,
}

/// Routing DAG of every measured path toward one destination AS.
#[derive(Debug, Clone)]
pub struct DestinationGraph {
    dst: AsNumber,
    edges: Vec<GraphEdge>,
    successors: BTreeMap<AsNumber, BTreeSet<AsNumber>>,
}

impl DestinationGraph {
    /// Validates the graph: no self loops, no edge leaving `dst`, no cycles,
    /// every node reaches `dst`, and provenance ids consistent with their source.
    pub fn new(dst: AsNumber, edges: Vec<GraphEdge>) -> Result<Self, BundleError> {
        let bad = |reason: String| BundleError::Integrity { dst, reason };
        let mut successors: BTreeMap<AsNumber, BTreeSet<AsNumber>> = BTreeMap::new();
        successors.entry(dst).or_default();
        for e in &edges {
            if e.from == e.to {
                return Err(bad(format!("self loop at AS{}", e.from)));
            }
            if e.from == dst {
                return Err(bad(format!("edge {}->{} leaves the destination", e.from, e.to)));
            }
            match (e.provenance.source.is_measured(), e.provenance.measurement_id.is_empty()) {
                (true, true) => {
                    return Err(bad(format!("measured edge {}->{} has no measurement id", e.from, e.to)))
                }
                (false, false) => {
                    return Err(bad(format!("simulated edge {}->{} carries a measurement id", e.from, e.to)))
                }
                _ => {}
            }
            successors.entry(e.from).or_default().insert(e.to);
            successors.entry(e.to).or_default();
        }

        // Kahn's algorithm over reversed edges, starting from dst: a node is
        // settled once all its successors are; anything left over is on a
        // cycle or cannot reach dst.
        let mut predecessors: BTreeMap<AsNumber, Vec<AsNumber>> = BTreeMap::new();
        let mut pending: BTreeMap<AsNumber, usize> = BTreeMap::new();
        for (node, succ) in &successors {
            pending.insert(*node, succ.len());
            for s in succ {
                predecessors.entry(*s).or_default().push(*node);
            }
        }
        let mut queue = vec![dst];
        let mut settled = BTreeSet::new();
        while let Some(node) = queue.pop() {
            settled.insert(node);
            for p in predecessors.get(&node).into_iter().flatten() {
                let count = pending.get_mut(p).expect("known node");
                *count -= 1;
                if *count == 0 {
                    queue.push(*p);
                }
            }
        }
        if let Some(stuck) = successors.keys().find(|n| !settled.contains(n)) {
            return Err(bad(format!(
                "AS{stuck} lies on a cycle or has no path to the destination"
            )));
        }

        Ok(DestinationGraph {
            dst,
            edges,
            successors,
        })
    }

    pub fn dst(&self) -> AsNumber {
        self.dst
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn contains(&self, asn: AsNumber) -> bool {
        self.successors.contains_key(&asn)
    }

    pub fn nodes(&self) -> impl Iterator<Item = AsNumber> + '_ {
        self.successors.keys().copied()
    }

    pub fn successors(&self, asn: AsNumber) -> impl Iterator<Item = AsNumber> + '_ {
        self.successors.get(&asn).into_iter().flatten().copied()
    }
}

/// One day's worth of destination graphs.
#[derive(Debug, Clone)]
pub struct GraphUpdateBundle {
    pub generated_at: DateTime<Utc>,
    pub prefix_table_version: String,
    graphs: BTreeMap<AsNumber, DestinationGraph>,
}

impl GraphUpdateBundle {
    pub fn new(
        generated_at: DateTime<Utc>,
        prefix_table_version: impl Into<String>,
        graphs: impl IntoIterator<Item = DestinationGraph>,
    ) -> Result<Self, BundleError> {
        let mut map = BTreeMap::new();
        for g in graphs {
            let dst = g.dst;
            if map.insert(dst, g).is_some() {
                return Err(BundleError::DuplicateGraph(dst));
            }
        }
        Ok(GraphUpdateBundle {
            generated_at,
            prefix_table_version: prefix_table_version.into(),
            graphs: map,
        })
    }

    /// A bundle without graphs; every query falls back to simulation.
    pub fn empty() -> Self {
        GraphUpdateBundle {
            generated_at: DateTime::<Utc>::UNIX_EPOCH,
            prefix_table_version: String::new(),
            graphs: BTreeMap::new(),
        }
    }

    pub fn graph(&self, dst: AsNumber) -> Option<&DestinationGraph> {
        self.graphs.get(&dst)
    }

    pub fn graphs(&self) -> impl Iterator<Item = &DestinationGraph> {
        self.graphs.values()
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Age of the bundle relative to `now`, in seconds.
    pub fn age_seconds(&self, now: DateTime<Utc>) -> i64 {
        (now - self.generated_at).num_seconds()
    }

    pub fn measured_edges(&self) -> impl Iterator<Item = &GraphEdge> {
        self.graphs
            .values()
            .flat_map(|g| g.edges.iter())
            .filter(|e| e.provenance.source.is_measured())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderRecord {
    generated_at: DateTime<Utc>,
    prefix_table_version: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    from: AsNumber,
    to: AsNumber,
    src: EdgeSource,
    #[serde(default)]
    mid: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphRecord {
    dst: AsNumber,
    edges: Vec<EdgeRecord>,
}

/// Reads a JSON-lines bundle: one header record, then one record per destination.
pub fn load_update(reader: impl Read) -> Result<GraphUpdateBundle, BundleError> {
    let mut header: Option<HeaderRecord> = None;
    let mut graphs: BTreeMap<AsNumber, DestinationGraph> = BTreeMap::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| BundleError::Parse {
            line: line_no,
            message: e.to_string(),
        };
        if header.is_none() {
            header = Some(serde_json::from_str(&line).map_err(parse_err)?);
            continue;
        }
        let record: GraphRecord = serde_json::from_str(&line).map_err(parse_err)?;
        let edges = record
            .edges
            .into_iter()
            .map(|e| GraphEdge {
                from: e.from,
                to: e.to,
                provenance: EdgeProvenance {
                    source: e.src,
                    measurement_id: e.mid,
                },
            })
            .collect();
        let graph = DestinationGraph::new(record.dst, edges)?;
        if graphs.insert(record.dst, graph).is_some() {
            return Err(BundleError::DuplicateGraph(record.dst));
        }
    }
    let header = header.ok_or(BundleError::MissingHeader)?;
    Ok(GraphUpdateBundle {
        generated_at: header.generated_at,
        prefix_table_version: header.prefix_table_version,
        graphs,
    })
}

/// Serialises a bundle in the same JSON-lines layout [`load_update`] reads.
pub fn write_update(bundle: &GraphUpdateBundle, mut out: impl std::io::Write) -> std::io::Result<()> {
    let header = HeaderRecord {
        generated_at: bundle.generated_at,
        prefix_table_version: bundle.prefix_table_version.clone(),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for g in bundle.graphs() {
        let record = GraphRecord {
            dst: g.dst,
            edges: g
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    from: e.from,
                    to: e.to,
                    src: e.provenance.source,
                    mid: e.provenance.measurement_id.clone(),
                })
                .collect(),
        };
        writeln!(out, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}
