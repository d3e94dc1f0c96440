// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! Local replica of destination-based routing graphs.
//!
//! Queries are answered from measurement data whenever the destination's graph
//! covers the source, and fall back to route simulation otherwise.

mod bundle;
mod coverage;
mod store;

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

pub use bundle::{
    load_update, write_update, BundleError, DestinationGraph, EdgeProvenance, EdgeSource,
    GraphEdge, GraphUpdateBundle,
};
pub use coverage::{coverage_stats, BandwidthBuckets, CoverageQuery, CoverageReport, CoverageRow};
pub use store::{BundleFetcher, BundleStore, FileFetcher};

use crate::topology::{AsNumber, AsPath, AsTopology, RoutingTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum PredictionBasis {
    Measured,
    SimulatedFallback,
    MixedAugmented,
}

impl PredictionBasis {
    pub fn combine(self, other: PredictionBasis) -> PredictionBasis {
        if self == other {
            self
        } else {
            PredictionBasis::MixedAugmented
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PredictionBasis::Measured => "measured",
            PredictionBasis::SimulatedFallback => "simulated",
            PredictionBasis::MixedAugmented => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathPrediction {
    pub ases: BTreeSet<AsNumber>,
    pub basis: PredictionBasis,
}

/// Every simple path from `src` to `dst` inside the destination graph of `dst`.
///
/// `None` when the bundle has no graph for `dst` or the graph does not contain `src`.
pub fn stitch(bundle: &GraphUpdateBundle, src: AsNumber, dst: AsNumber) -> Option<BTreeSet<AsPath>> {
    let graph = bundle.graph(dst)?;
    if !graph.contains(src) {
        return None;
    }
    let mut out = BTreeSet::new();
    let mut stack = vec![src];
    stitch_walk(graph, dst, &mut stack, &mut out);
    Some(out)
}

fn stitch_walk(
    graph: &DestinationGraph,
    dst: AsNumber,
    stack: &mut Vec<AsNumber>,
    out: &mut BTreeSet<AsPath>,
) {
    let current = *stack.last().expect("non-empty");
    if current == dst {
        out.insert(AsPath::new(stack.clone()).expect("DAG walks are simple"));
        return;
    }
    for next in graph.successors(current) {
        stack.push(next);
        stitch_walk(graph, dst, stack, out);
        stack.pop();
    }
}

/// Union of [`stitch`] hops. Every node of a validated graph reaches `dst`, so
/// this is the set of nodes reachable from `src`.
pub fn stitch_ases(
    bundle: &GraphUpdateBundle,
    src: AsNumber,
    dst: AsNumber,
) -> Option<BTreeSet<AsNumber>> {
    let graph = bundle.graph(dst)?;
    if !graph.contains(src) {
        return None;
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![src];
    while let Some(node) = stack.pop() {
        if seen.insert(node) {
            stack.extend(graph.successors(node));
        }
    }
    Some(seen)
}

pub fn predict(
    bundle: &GraphUpdateBundle,
    topology: &AsTopology,
    src: AsNumber,
    dst: AsNumber,
) -> PathPrediction {
    PathOracle::new(bundle, topology).predict(src, dst)
}

pub fn bidirectional_exposure(
    bundle: &GraphUpdateBundle,
    topology: &AsTopology,
    a: AsNumber,
    b: AsNumber,
) -> PathPrediction {
    PathOracle::new(bundle, topology).bidirectional(a, b)
}

/// Query front end over one bundle and topology, memoising routing trees and
/// predictions. Safe to share between threads.
pub struct PathOracle<'a> {
    bundle: &'a GraphUpdateBundle,
    topology: &'a AsTopology,
    trees: Mutex<HashMap<AsNumber, Arc<RoutingTree>>>,
    predictions: Mutex<HashMap<(AsNumber, AsNumber), PathPrediction>>,
}

impl<'a> PathOracle<'a> {
    pub fn new(bundle: &'a GraphUpdateBundle, topology: &'a AsTopology) -> Self {
        PathOracle {
            bundle,
            topology,
            trees: Mutex::new(HashMap::new()),
            predictions: Mutex::new(HashMap::new()),
        }
    }

    pub fn bundle(&self) -> &'a GraphUpdateBundle {
        self.bundle
    }

    pub fn topology(&self) -> &'a AsTopology {
        self.topology
    }

    fn tree(&self, dst: AsNumber) -> Option<Arc<RoutingTree>> {
        if !self.topology.contains(dst) {
            return None;
        }
        let mut trees = self.trees.lock().expect("tree cache poisoned");
        Some(
            trees
                .entry(dst)
                .or_insert_with(|| Arc::new(RoutingTree::compute(self.topology, &[dst])))
                .clone(),
        )
    }

    /// Measured paths first; simulation only when the bundle cannot answer.
    pub fn predict(&self, src: AsNumber, dst: AsNumber) -> PathPrediction {
        if let Some(hit) = self
            .predictions
            .lock()
            .expect("prediction cache poisoned")
            .get(&(src, dst))
        {
            return hit.clone();
        }
        let prediction = match stitch_ases(self.bundle, src, dst) {
            Some(ases) => PathPrediction {
                ases,
                basis: PredictionBasis::Measured,
            },
            None => {
                let ases = match self.tree(dst) {
                    Some(tree) if self.topology.contains(src) => tree.ases_from(src),
                    _ => BTreeSet::new(),
                };
                PathPrediction {
                    ases,
                    basis: PredictionBasis::SimulatedFallback,
                }
            }
        };
        self.predictions
            .lock()
            .expect("prediction cache poisoned")
            .insert((src, dst), prediction.clone());
        prediction
    }

    /// ASes on the forward and reverse paths between `a` and `b`.
    pub fn bidirectional(&self, a: AsNumber, b: AsNumber) -> PathPrediction {
        let forward = self.predict(a, b);
        let reverse = self.predict(b, a);
        let mut ases = forward.ases;
        ases.extend(reverse.ases);
        PathPrediction {
            ases,
            basis: forward.basis.combine(reverse.basis),
        }
    }
}
