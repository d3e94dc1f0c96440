// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;

use super::exposure::{compute_exposure, mark_safety, ConnectionRequest, ExposureContext, SafetyVerdict};
use super::ClientError;
use crate::tor::{constraints_ok, weighted_select, Circuit, CircuitId, ConsensusSnapshot, Relay, TorError, MAX_RESAMPLES};

/// Load-balancing weight of a circuit: entry bandwidth times exit bandwidth.
pub fn circuit_weight(circuit: &Circuit) -> u128 {
    u128::from(circuit.entry().bandwidth) * u128::from(circuit.exit().bandwidth)
}

/// Selection probability of each weight. Zero total weight means a uniform choice.
pub fn selection_probabilities(weights: &[u128]) -> Vec<f64> {
    let total: u128 = weights.iter().sum();
    if total == 0 {
        let n = weights.len().max(1) as f64;
        return weights.iter().map(|_| 1.0 / n).collect();
    }
    weights.iter().map(|&w| w as f64 / total as f64).collect()
}

/// Draws an index with probability proportional to its weight, exactly.
pub fn weighted_pick<R: Rng + ?Sized>(weights: &[u128], rng: &mut R) -> Option<usize> {
    if weights.is_empty() {
        return None;
    }
    let total: u128 = weights.iter().sum();
    if total == 0 {
        return Some(rng.random_range(0..weights.len()));
    }
    let mut point = rng.random_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if point < w {
            return Some(i);
        }
        point -= w;
    }
    unreachable!("draw is below the weight total")
}

/// Picks among the live circuits that can carry `request` and are judged safe
/// by `verdict`. Candidates are ordered by circuit id before the draw.
pub fn allocate_with<'c, R, V>(
    circuits: impl IntoIterator<Item = &'c Circuit>,
    request: &ConnectionRequest,
    mut verdict: V,
    rng: &mut R,
) -> Option<&'c Circuit>
where
    R: Rng + ?Sized,
    V: FnMut(&Circuit) -> SafetyVerdict,
{
    let target = request.target();
    let mut candidates: Vec<&Circuit> = circuits
        .into_iter()
        .filter(|c| c.is_live() && c.supports(&target))
        .filter(|c| verdict(c).safe)
        .collect();
    candidates.sort_by_key(|c| c.id());
    let weights: Vec<u128> = candidates.iter().map(|c| circuit_weight(c)).collect();
    weighted_pick(&weights, rng).map(|i| candidates[i])
}

/// [`allocate_with`] computing every verdict from scratch.
pub fn allocate<'c, R: Rng + ?Sized>(
    circuits: impl IntoIterator<Item = &'c Circuit>,
    request: &ConnectionRequest,
    ctx: &ExposureContext<'_>,
    rng: &mut R,
) -> Option<&'c Circuit> {
    allocate_with(circuits, request, |c| verdict_for(c, request, ctx), rng)
}

pub fn verdict_for(circuit: &Circuit, request: &ConnectionRequest, ctx: &ExposureContext<'_>) -> SafetyVerdict {
    match compute_exposure(circuit, request, ctx) {
        Ok(exposure) => mark_safety(&exposure),
        Err(e) => SafetyVerdict::unresolved(e),
    }
}

fn severity(v: &SafetyVerdict) -> usize {
    if v.unresolved.is_some() {
        usize::MAX
    } else {
        v.adversaries.len()
    }
}

/// Least-exposed circuit among unsafe candidates: fewest adversaries, with
/// ties drawn by bandwidth weight. Unresolvable candidates rank last.
pub fn fallback_select<'c, R: Rng + ?Sized>(
    candidates: &'c [(Circuit, SafetyVerdict)],
    rng: &mut R,
) -> Result<&'c (Circuit, SafetyVerdict), ClientError> {
    let best = candidates
        .iter()
        .map(|(_, v)| severity(v))
        .min()
        .ok_or_else(|| ClientError::Argument("fallback needs at least one candidate".into()))?;
    let tied: Vec<&(Circuit, SafetyVerdict)> = candidates.iter().filter(|(_, v)| severity(v) == best).collect();
    let weights: Vec<u128> = tied.iter().map(|(c, _)| circuit_weight(c)).collect();
    let i = weighted_pick(&weights, rng).expect("tied set is non-empty");
    Ok(tied[i])
}

#[derive(Debug, Clone)]
pub struct OnDemandOutcome {
    pub circuit: Circuit,
    pub verdict: SafetyVerdict,
    /// No evaluated combination was safe; the least exposed one was used.
    pub fallback: bool,
    pub evaluated: usize,
}

fn pair_ok(a: &Relay, b: &Relay) -> bool {
    a.fingerprint != b.fingerprint
        && a.subnet16() != b.subnet16()
        && (a.family.is_none() || a.family != b.family)
}

/// Builds a circuit for `request` by trying (entry, exit) pairs in a
/// bandwidth-weighted random order until one is safe or `budget` pairs have
/// been evaluated. Entries come from Guard relays, exits from Exit relays that
/// accept the destination.
pub fn build_on_demand<R: Rng + ?Sized>(
    snapshot: &ConsensusSnapshot,
    request: &ConnectionRequest,
    ctx: &ExposureContext<'_>,
    budget: usize,
    id: CircuitId,
    rng: &mut R,
) -> Result<OnDemandOutcome, ClientError> {
    let target = request.target();
    let exits: Vec<&Arc<Relay>> = snapshot
        .exits()
        .filter(|e| e.bandwidth > 0 && e.supports(&target))
        .collect();
    if exits.is_empty() {
        return Err(TorError::NoExit { port: request.dest_port }.into());
    }
    let guards: Vec<&Arc<Relay>> = snapshot.guards().filter(|g| g.bandwidth > 0).collect();
    if guards.is_empty() {
        return Err(TorError::NoGuard.into());
    }

    // Weighted random order without replacement: each pair gets key ln(u)/w
    // and pairs are visited by decreasing key.
    let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(guards.len() * exits.len());
    for (gi, g) in guards.iter().enumerate() {
        for (ei, e) in exits.iter().enumerate() {
            if !pair_ok(g, e) {
                continue;
            }
            let w = g.bandwidth as f64 * e.bandwidth as f64;
            let u: f64 = 1.0 - rng.random::<f64>();
            order.push((u.ln() / w, gi, ei));
        }
    }
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut evaluated: Vec<(Circuit, SafetyVerdict)> = Vec::new();
    for &(_, gi, ei) in &order {
        if evaluated.len() >= budget {
            break;
        }
        let (entry, exit) = (guards[gi], exits[ei]);
        let Some(middle) = pick_middle(snapshot, entry, exit, rng) else {
            continue;
        };
        let circuit = Circuit::new(id, Arc::clone(entry), middle, Arc::clone(exit), request.at)?;
        let verdict = verdict_for(&circuit, request, ctx);
        if verdict.safe {
            return Ok(OnDemandOutcome {
                circuit,
                verdict,
                fallback: false,
                evaluated: evaluated.len() + 1,
            });
        }
        evaluated.push((circuit, verdict));
    }
    let n = evaluated.len();
    if n == 0 {
        return Err(TorError::Constraints("no constraint-compatible entry and exit pair".into()).into());
    }
    let (circuit, verdict) = fallback_select(&evaluated, rng)?.clone();
    Ok(OnDemandOutcome {
        circuit,
        verdict,
        fallback: true,
        evaluated: n,
    })
}

/// Bandwidth-weighted middle relay compatible with both ends.
pub(crate) fn pick_middle<R: Rng + ?Sized>(
    snapshot: &ConsensusSnapshot,
    entry: &Relay,
    exit: &Relay,
    rng: &mut R,
) -> Option<Arc<Relay>> {
    let all = snapshot.relays();
    for _ in 0..MAX_RESAMPLES {
        let m = weighted_select(all, rng).ok()?;
        if constraints_ok(&[entry, m.as_ref(), exit]).unwrap_or(false) {
            return Some(Arc::clone(m));
        }
    }
    None
}
