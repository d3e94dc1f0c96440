// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! Gao-Rexford route computation.
//!
//! Routes toward a destination (or several competing origins) are computed in
//! three phases, following the export rules of the model:
//!
//! 1. customer routes propagate upward from the origins along customer→provider
//!    edges, shortest first;
//! 2. an AS without a customer route takes the best route offered by a peer,
//!    and peers only offer origin or customer routes;
//! 3. any AS still without a route learns one from a provider, and providers
//!    export every route they hold.
//!
//! Within a class, shorter routes win. Equally preferred routes are all kept, so
//! every AS ends up with a set of next hops rather than a single one.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use super::{AsNumber, AsPath, AsTopology, TopologyError};

/// Preference class of a route, most preferred first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RouteClass {
    Origin,
    Customer,
    Peer,
    Provider,
}

impl RouteClass {
    /// Routes of this class may be exported to peers and providers.
    fn exportable_upward(self) -> bool {
        matches!(self, RouteClass::Origin | RouteClass::Customer)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RouteEntry {
    pub class: RouteClass,
    /// Number of AS hops to the origin.
    pub length: u32,
    /// Index into the origin list; lower indices win ties.
    pub origin: usize,
    pub next_hops: Vec<AsNumber>,
}

impl RouteEntry {
    fn rank(&self) -> (u32, usize) {
        (self.length, self.origin)
    }
}

/// Best routes of every AS toward a set of competing origins.
#[derive(Debug, Clone)]
pub struct RoutingTree {
    origins: Vec<AsNumber>,
    routes: HashMap<AsNumber, RouteEntry>,
}

impl RoutingTree {
    /// Computes the routing state when every AS in `origins` announces the same
    /// destination. On a tie in class and length, the origin listed first wins.
    pub fn compute(topology: &AsTopology, origins: &[AsNumber]) -> RoutingTree {
        let mut routes: HashMap<AsNumber, RouteEntry> = HashMap::new();
        for (idx, origin) in origins.iter().enumerate() {
            if topology.contains(*origin) {
                routes.entry(*origin).or_insert(RouteEntry {
                    class: RouteClass::Origin,
                    length: 0,
                    origin: idx,
                    next_hops: Vec::new(),
                });
            }
        }

        // Phase 1: customer routes.
        let mut heap: BinaryHeap<Reverse<(u32, usize, AsNumber)>> = routes
            .iter()
            .map(|(a, r)| Reverse((r.length, r.origin, *a)))
            .collect();
        while let Some(Reverse((length, origin, current))) = heap.pop() {
            let Some(neighbors) = topology.neighbors(current) else {
                continue;
            };
            for &provider in &neighbors.providers {
                if offer(&mut routes, provider, current, RouteClass::Customer, length + 1, origin) {
                    heap.push(Reverse((length + 1, origin, provider)));
                }
            }
        }

        // Phase 2: peer routes only come from peers holding origin/customer routes.
        let mut peer_offers: BTreeMap<AsNumber, Vec<(u32, usize, AsNumber)>> = BTreeMap::new();
        for (&current, entry) in &routes {
            if !entry.class.exportable_upward() {
                continue;
            }
            for &peer in topology.peers_of(current).collect::<Vec<_>>().iter() {
                if !routes.contains_key(&peer) {
                    peer_offers
                        .entry(peer)
                        .or_default()
                        .push((entry.length + 1, entry.origin, current));
                }
            }
        }
        for (target, offers) in peer_offers {
            for (length, origin, via) in offers {
                offer(&mut routes, target, via, RouteClass::Peer, length, origin);
            }
        }

        // Phase 3: provider routes flow down provider→customer edges.
        let mut heap: BinaryHeap<Reverse<(u32, usize, AsNumber)>> = routes
            .iter()
            .map(|(a, r)| Reverse((r.length, r.origin, *a)))
            .collect();
        while let Some(Reverse((length, origin, current))) = heap.pop() {
            match routes.get(&current) {
                Some(r) if r.rank() == (length, origin) => {}
                _ => continue,
            }
            let Some(neighbors) = topology.neighbors(current) else {
                continue;
            };
            for &customer in &neighbors.customers {
                if let Some(existing) = routes.get(&customer) {
                    if existing.class != RouteClass::Provider {
                        continue;
                    }
                }
                if offer(&mut routes, customer, current, RouteClass::Provider, length + 1, origin) {
                    heap.push(Reverse((length + 1, origin, customer)));
                }
            }
        }

        for entry in routes.values_mut() {
            entry.next_hops.sort_unstable();
        }
        RoutingTree {
            origins: origins.to_vec(),
            routes,
        }
    }

    pub fn origins(&self) -> &[AsNumber] {
        &self.origins
    }

    pub fn has_route(&self, asn: AsNumber) -> bool {
        self.routes.contains_key(&asn)
    }

    pub fn route_class(&self, asn: AsNumber) -> Option<RouteClass> {
        self.routes.get(&asn).map(|r| r.class)
    }

    /// Path length in AS hops (edges).
    pub fn route_length(&self, asn: AsNumber) -> Option<u32> {
        self.routes.get(&asn).map(|r| r.length)
    }

    /// The origin the AS's best routes lead to.
    pub fn chosen_origin(&self, asn: AsNumber) -> Option<AsNumber> {
        self.routes.get(&asn).map(|r| self.origins[r.origin])
    }

    pub fn next_hops(&self, asn: AsNumber) -> &[AsNumber] {
        self.routes
            .get(&asn)
            .map(|r| r.next_hops.as_slice())
            .unwrap_or(&[])
    }

    /// Every best path from `src`. Empty when `src` has no route.
    pub fn paths_from(&self, src: AsNumber) -> BTreeSet<AsPath> {
        let mut out = BTreeSet::new();
        if !self.has_route(src) {
            return out;
        }
        let mut stack = vec![src];
        self.walk(src, &mut stack, &mut out);
        out
    }

    fn walk(&self, current: AsNumber, stack: &mut Vec<AsNumber>, out: &mut BTreeSet<AsPath>) {
        let hops = self.next_hops(current);
        if hops.is_empty() {
            // Lengths strictly decrease along next hops, so this is always loop-free.
            out.insert(AsPath::new(stack.clone()).expect("best paths are loop-free"));
            return;
        }
        for &next in hops {
            stack.push(next);
            self.walk(next, stack, out);
            stack.pop();
        }
    }

    /// Union of ASes over every best path from `src`.
    pub fn ases_from(&self, src: AsNumber) -> BTreeSet<AsNumber> {
        let mut seen = BTreeSet::new();
        if !self.has_route(src) {
            return seen;
        }
        let mut stack = vec![src];
        while let Some(current) = stack.pop() {
            if seen.insert(current) {
                stack.extend(self.next_hops(current).iter().copied());
            }
        }
        seen
    }
}

/// Records a candidate route for `target` learned from `via`. Returns true when
/// the candidate strictly improved the target's route.
fn offer(
    routes: &mut HashMap<AsNumber, RouteEntry>,
    target: AsNumber,
    via: AsNumber,
    class: RouteClass,
    length: u32,
    origin: usize,
) -> bool {
    match routes.get_mut(&target) {
        None => {
            routes.insert(
                target,
                RouteEntry {
                    class,
                    length,
                    origin,
                    next_hops: vec![via],
                },
            );
            true
        }
        Some(existing) => {
            let candidate = (class, length, origin);
            let current = (existing.class, existing.length, existing.origin);
            if candidate < current {
                *existing = RouteEntry {
                    class,
                    length,
                    origin,
                    next_hops: vec![via],
                };
                true
            } else {
                if candidate == current && !existing.next_hops.contains(&via) {
                    existing.next_hops.push(via);
                }
                false
            }
        }
    }
}

/// Upper bound on `max_len` for exhaustive enumeration.
pub const MAX_ENUMERATION_LEN: usize = 10;

/// Every loop-free valley-free path from `src` to `dst` with at most `max_len` ASes.
///
/// Exponential; intended as a desk-scale oracle.
pub fn enumerate_valley_free_paths(
    topology: &AsTopology,
    src: AsNumber,
    dst: AsNumber,
    max_len: usize,
) -> Result<BTreeSet<AsPath>, TopologyError> {
    if max_len > MAX_ENUMERATION_LEN {
        return Err(TopologyError::EnumerationBound(max_len));
    }
    let mut out = BTreeSet::new();
    if max_len == 0 || !topology.contains(src) || !topology.contains(dst) {
        return Ok(out);
    }
    let mut stack = vec![src];
    descend(topology, dst, max_len, true, &mut stack, &mut out);
    Ok(out)
}

fn descend(
    topology: &AsTopology,
    dst: AsNumber,
    max_len: usize,
    ascending: bool,
    stack: &mut Vec<AsNumber>,
    out: &mut BTreeSet<AsPath>,
) {
    let current = *stack.last().expect("non-empty stack");
    if current == dst {
        out.insert(AsPath::new(stack.clone()).expect("stack holds distinct ASes"));
        return;
    }
    if stack.len() == max_len {
        return;
    }
    let Some(neighbors) = topology.neighbors(current) else {
        return;
    };
    let mut steps: Vec<(AsNumber, bool)> = Vec::new();
    if ascending {
        steps.extend(neighbors.providers.iter().map(|p| (*p, true)));
        steps.extend(neighbors.peers.iter().map(|p| (*p, false)));
    }
    steps.extend(neighbors.customers.iter().map(|c| (*c, false)));
    for (next, still_ascending) in steps {
        if stack.contains(&next) {
            continue;
        }
        stack.push(next);
        descend(topology, dst, max_len, still_ascending, stack, out);
        stack.pop();
    }
}
