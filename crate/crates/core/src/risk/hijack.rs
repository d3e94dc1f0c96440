// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::topology::{AsNumber, AsTopology, Prefix, RouteClass, RoutingTree, TopologyError};

#[derive(Debug, thiserror::Error)]
pub enum RiskError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("attacker AS{0} is also the victim")]
    AttackerIsVictim(AsNumber),
    #[error("{0} has no registered origin")]
    UnregisteredPrefix(Prefix),
    #[error("{0}")]
    Argument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttackOutcome {
    pub hijacked: bool,
    pub intercepted: bool,
}

/// Routing state while `attacker` and `victim` both originate the victim's prefix.
///
/// The attacker is listed first, so it wins every tie in the decision process.
pub struct AttackState {
    attacker: AsNumber,
    victim: AsNumber,
    tree: RoutingTree,
    can_forward: bool,
}

impl AttackState {
    pub fn new(topology: &AsTopology, attacker: AsNumber, victim: AsNumber) -> Result<Self, RiskError> {
        topology.require(attacker)?;
        topology.require(victim)?;
        if attacker == victim {
            return Err(RiskError::AttackerIsVictim(attacker));
        }
        let tree = RoutingTree::compute(topology, &[attacker, victim]);
        // The attacker can forward captured traffic if some neighbor still routes
        // to the victim and would export that route to the attacker.
        let providers: BTreeSet<AsNumber> = topology.providers_of(attacker).collect();
        let can_forward = topology
            .providers_of(attacker)
            .chain(topology.peers_of(attacker))
            .chain(topology.customers_of(attacker))
            .any(|nb| {
                tree.chosen_origin(nb) == Some(victim)
                    && (providers.contains(&nb)
                        || matches!(
                            tree.route_class(nb),
                            Some(RouteClass::Origin | RouteClass::Customer)
                        ))
            });
        Ok(AttackState {
            attacker,
            victim,
            tree,
            can_forward,
        })
    }

    /// ASes whose best route now leads to the attacker.
    pub fn captured(&self, topology: &AsTopology) -> BTreeSet<AsNumber> {
        topology
            .asns()
            .filter(|a| self.tree.chosen_origin(*a) == Some(self.attacker))
            .collect()
    }

    pub fn outcome(&self, source: AsNumber) -> AttackOutcome {
        let hijacked = source != self.victim && self.tree.chosen_origin(source) == Some(self.attacker);
        AttackOutcome {
            hijacked,
            intercepted: hijacked && self.can_forward,
        }
    }

    pub fn victim(&self) -> AsNumber {
        self.victim
    }
}

/// Whether `source` sends traffic for the victim's prefix to `attacker` once the
/// attacker originates the same prefix.
pub fn hijack_feasible(
    topology: &AsTopology,
    attacker: AsNumber,
    source: AsNumber,
    victim: AsNumber,
) -> Result<bool, RiskError> {
    topology.require(source)?;
    Ok(AttackState::new(topology, attacker, victim)?.outcome(source).hijacked)
}

/// A hijack after which the attacker can still deliver traffic to the victim.
pub fn intercept_feasible(
    topology: &AsTopology,
    attacker: AsNumber,
    source: AsNumber,
    victim: AsNumber,
) -> Result<bool, RiskError> {
    topology.require(source)?;
    Ok(AttackState::new(topology, attacker, victim)?.outcome(source).intercepted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Hijack,
    Interception,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HijackScenario {
    pub attacker: AsNumber,
    pub victim_prefix: Prefix,
    pub observer: AsNumber,
    pub kind: AttackKind,
}

impl HijackScenario {
    /// The victim is the registered origin of `victim_prefix`.
    pub fn succeeds(&self, topology: &AsTopology) -> Result<bool, RiskError> {
        let victim = topology
            .registered_origin(&self.victim_prefix)
            .ok_or(RiskError::UnregisteredPrefix(self.victim_prefix))?;
        match self.kind {
            AttackKind::Hijack => hijack_feasible(topology, self.attacker, self.observer, victim),
            AttackKind::Interception => intercept_feasible(topology, self.attacker, self.observer, victim),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttackTally {
    pub attempts: usize,
    pub hijacks: usize,
    pub intercepts: usize,
}

impl AttackTally {
    fn record(&mut self, outcome: AttackOutcome) {
        self.attempts += 1;
        self.hijacks += outcome.hijacked as usize;
        self.intercepts += outcome.intercepted as usize;
    }

    pub fn hijack_fraction(&self) -> f64 {
        ratio(self.hijacks, self.attempts)
    }

    pub fn intercept_fraction(&self) -> f64 {
        ratio(self.intercepts, self.attempts)
    }
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuccessMatrix {
    pub per_attacker: BTreeMap<AsNumber, AttackTally>,
    pub per_victim: BTreeMap<AsNumber, AttackTally>,
}

impl SuccessMatrix {
    pub fn write_attackers_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "attacker_asn,hijack_fraction,intercept_fraction")?;
        for (asn, t) in &self.per_attacker {
            writeln!(out, "{asn},{:.6},{:.6}", t.hijack_fraction(), t.intercept_fraction())?;
        }
        Ok(())
    }

    /// `success_fraction` is the hijack success rate against the victim.
    pub fn write_victims_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "victim_asn,attempts,success_fraction")?;
        for (asn, t) in &self.per_victim {
            writeln!(out, "{asn},{},{:.6}", t.attempts, t.hijack_fraction())?;
        }
        Ok(())
    }
}

/// Evaluates every attacker against every (source, victim) pair.
///
/// Attempts where the attacker is the source or the victim are skipped and do
/// not count toward either denominator.
pub fn attack_success_matrix(
    topology: &AsTopology,
    attackers: &BTreeSet<AsNumber>,
    pairs: &[(AsNumber, AsNumber)],
) -> Result<SuccessMatrix, RiskError> {
    if attackers.is_empty() || pairs.is_empty() {
        return Err(RiskError::Argument(
            "attack matrix needs at least one attacker and one pair".into(),
        ));
    }
    for (src, victim) in pairs {
        topology.require(*src)?;
        topology.require(*victim)?;
    }
    let mut by_victim: BTreeMap<AsNumber, Vec<AsNumber>> = BTreeMap::new();
    for (src, victim) in pairs {
        by_victim.entry(*victim).or_default().push(*src);
    }
    let mut matrix = SuccessMatrix::default();
    for &attacker in attackers {
        topology.require(attacker)?;
        let row = matrix.per_attacker.entry(attacker).or_default();
        for (&victim, sources) in &by_victim {
            if victim == attacker {
                continue;
            }
            let state = AttackState::new(topology, attacker, victim)?;
            for &src in sources {
                if src == attacker {
                    continue;
                }
                let outcome = state.outcome(src);
                row.record(outcome);
                matrix.per_victim.entry(victim).or_default().record(outcome);
            }
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::asn;

    #[test]
    fn customer_attacker_beats_provider_route() {
        // Source 1 reaches victim 6 only through its provider 2; attacker 3 is
        // 1's customer, so the bogus customer route wins.
        let topo = AsTopology::builder()
            .provider_customer(2, 1)
            .provider_customer(2, 6)
            .provider_customer(1, 3)
            .provider_customer(4, 3)
            .provider_customer(4, 5)
            .build();
        assert!(hijack_feasible(&topo, asn(3), asn(1), asn(6)).unwrap());
    }

    #[test]
    fn isolated_attacker_fails() {
        let topo = AsTopology::builder()
            .provider_customer(2, 1)
            .provider_customer(2, 6)
            .node(9)
            .build();
        assert!(!hijack_feasible(&topo, asn(9), asn(1), asn(6)).unwrap());
        assert!(!intercept_feasible(&topo, asn(9), asn(1), asn(6)).unwrap());
    }

    #[test]
    fn victim_keeps_its_own_prefix() {
        let topo = AsTopology::builder().provider_customer(2, 1).provider_customer(1, 3).build();
        assert!(!hijack_feasible(&topo, asn(3), asn(1), asn(1)).unwrap());
    }

    #[test]
    fn argument_errors() {
        let topo = AsTopology::builder().provider_customer(2, 1).build();
        assert!(matches!(
            hijack_feasible(&topo, asn(9), asn(1), asn(2)),
            Err(RiskError::Topology(_))
        ));
        assert!(matches!(
            hijack_feasible(&topo, asn(2), asn(1), asn(2)),
            Err(RiskError::AttackerIsVictim(_))
        ));
        assert!(attack_success_matrix(&topo, &BTreeSet::new(), &[(asn(1), asn(2))]).is_err());
        assert!(attack_success_matrix(&topo, &BTreeSet::from([asn(1)]), &[]).is_err());
    }

    #[test]
    fn interception_needs_an_uncaptured_route() {
        // Attacker 4 hangs below 3 only; 3 is captured (customer route to 4 beats
        // its provider route to the victim), so 4 cannot forward.
        //
        //      1
        //     / \
        //    2   3
        //    |   |
        //    6   4
        //    |
        //    7 (source)
        let topo = AsTopology::builder()
            .provider_customer(1, 2)
            .provider_customer(1, 3)
            .provider_customer(2, 6)
            .provider_customer(3, 4)
            .provider_customer(6, 7)
            .provider_customer(5, 7)
            .provider_customer(5, 4)
            .build();
        // 7 hears victim 6 directly from its provider 6 (length 1) and the
        // attacker via provider 5 (length 2): the victim route wins, no hijack.
        assert!(!hijack_feasible(&topo, asn(4), asn(7), asn(6)).unwrap());
        // 3 reaches both: attacker as customer (len 1) beats victim via provider.
        assert!(hijack_feasible(&topo, asn(4), asn(3), asn(6)).unwrap());
        // 4's only neighbors 3 and 5 both route to the attacker.
        assert!(!intercept_feasible(&topo, asn(4), asn(3), asn(6)).unwrap());
    }

    #[test]
    fn peer_of_victim_intercepts_remote_source() {
        // Attacker 3 peers with victim 2 and is the provider of source 4.
        let topo = AsTopology::builder()
            .peers(3, 2)
            .provider_customer(1, 2)
            .provider_customer(1, 5)
            .provider_customer(5, 4)
            .provider_customer(3, 4)
            .build();
        // 4 hears the attacker from provider 3 at length 1 and the victim at
        // length 2 or more, so it is captured.
        assert!(hijack_feasible(&topo, asn(3), asn(4), asn(2)).unwrap());
        assert!(intercept_feasible(&topo, asn(3), asn(4), asn(2)).unwrap());
    }

    #[test]
    fn matrix_single_pair() {
        let topo = AsTopology::builder()
            .peers(3, 2)
            .provider_customer(1, 2)
            .provider_customer(1, 5)
            .provider_customer(5, 4)
            .provider_customer(3, 4)
            .build();
        let m = attack_success_matrix(&topo, &BTreeSet::from([asn(3)]), &[(asn(4), asn(2))]).unwrap();
        assert_eq!(m.per_attacker[&asn(3)].hijack_fraction(), 1.0);
        assert_eq!(m.per_attacker[&asn(3)].intercept_fraction(), 1.0);
        assert_eq!(m.per_victim[&asn(2)].attempts, 1);
        let mut out = Vec::new();
        m.write_attackers_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "attacker_asn,hijack_fraction,intercept_fraction\n3,1.000000,1.000000\n"
        );
    }
}
