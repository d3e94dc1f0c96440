// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use chrono::{DateTime, Utc};

use crate::pathcache::{PathOracle, PredictionBasis};
use crate::risk::{suspects_for, MoasAlert};
use crate::topology::{AsNumber, Prefix};
use crate::tor::{Circuit, ExitTarget, Relay};

use super::ClientError;

/// One stream the client must place on a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConnectionRequest {
    pub at: DateTime<Utc>,
    pub dest_ip: Ipv4Addr,
    pub dest_port: u16,
    pub client_asn: AsNumber,
}

impl ConnectionRequest {
    pub fn new(
        at: DateTime<Utc>,
        dest_ip: Ipv4Addr,
        dest_port: u32,
        client_asn: AsNumber,
    ) -> Result<Self, ClientError> {
        let dest_port = u16::try_from(dest_port)
            .ok()
            .filter(|p| *p >= 1)
            .ok_or_else(|| ClientError::Argument(format!("port {dest_port} outside 1-65535")))?;
        Ok(ConnectionRequest {
            at,
            dest_ip,
            dest_port,
            client_asn,
        })
    }

    pub fn target(&self) -> ExitTarget {
        ExitTarget::new(self.dest_ip, self.dest_port)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExposureError {
    #[error("destination {0} matches no prefix")]
    UnresolvedDestination(Ipv4Addr),
    #[error("relay {0} has no origin AS")]
    UnresolvedRelay(String),
}

/// Which adversary the exposure sets account for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AdversaryModel {
    /// Only the client-to-entry and exit-to-destination directions.
    ForwardOnly,
    /// Both directions of each end.
    Asymmetric,
    /// Both directions plus paths through ASes suspected of hijacking the
    /// prefixes involved.
    AsymmetricHijack,
}

/// Inputs shared by every exposure computation of one client step.
#[derive(Clone, Copy)]
pub struct ExposureContext<'a> {
    pub paths: &'a PathOracle<'a>,
    pub alerts: &'a [MoasAlert],
}

/// ASes and prefixes a circuit's exposure depends on, for one destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoints {
    pub src: AsNumber,
    pub entry: AsNumber,
    pub exit: AsNumber,
    pub dst: AsNumber,
    pub src_prefixes: Vec<Prefix>,
    pub entry_prefix: Prefix,
    pub exit_prefix: Prefix,
    pub dst_prefix: Prefix,
}

impl Endpoints {
    pub fn resolve(circuit: &Circuit, request: &ConnectionRequest, ctx: &ExposureContext<'_>) -> Result<Self, ExposureError> {
        let topo = ctx.paths.topology();
        let (dst_prefix, dst) = topo
            .lookup(request.dest_ip)
            .ok_or(ExposureError::UnresolvedDestination(request.dest_ip))?;
        let relay_as = |r: &Relay| match (r.asn, r.prefix) {
            (Some(a), Some(p)) => Ok((a, p)),
            _ => Err(ExposureError::UnresolvedRelay(r.fingerprint.clone())),
        };
        let (entry, entry_prefix) = relay_as(circuit.entry())?;
        let (exit, exit_prefix) = relay_as(circuit.exit())?;
        Ok(Endpoints {
            src: request.client_asn,
            entry,
            exit,
            dst,
            src_prefixes: topo.prefixes_of(request.client_asn).to_vec(),
            entry_prefix,
            exit_prefix,
            dst_prefix,
        })
    }

    /// Every prefix whose MOAS status feeds into the exposure sets.
    pub fn prefixes(&self) -> impl Iterator<Item = Prefix> + '_ {
        self.src_prefixes
            .iter()
            .copied()
            .chain([self.entry_prefix, self.exit_prefix, self.dst_prefix])
    }
}

/// Suspected hijackers of each endpoint's prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuspectSets {
    pub src: BTreeSet<AsNumber>,
    pub entry: BTreeSet<AsNumber>,
    pub exit: BTreeSet<AsNumber>,
    pub dst: BTreeSet<AsNumber>,
}

impl SuspectSets {
    pub fn from_alerts(alerts: &[MoasAlert], ends: &Endpoints) -> Self {
        let mut src = BTreeSet::new();
        for p in &ends.src_prefixes {
            src.extend(suspects_for(alerts, *p));
        }
        SuspectSets {
            src,
            entry: suspects_for(alerts, ends.entry_prefix),
            exit: suspects_for(alerts, ends.exit_prefix),
            dst: suspects_for(alerts, ends.dst_prefix),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureSets {
    pub src_en: BTreeSet<AsNumber>,
    pub ex_dst: BTreeSet<AsNumber>,
    pub basis: PredictionBasis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyVerdict {
    pub safe: bool,
    pub adversaries: BTreeSet<AsNumber>,
    /// Set when an endpoint could not be mapped to an AS. Such circuits are
    /// never safe.
    pub unresolved: Option<ExposureError>,
}

impl SafetyVerdict {
    pub fn unresolved(err: ExposureError) -> Self {
        SafetyVerdict {
            safe: false,
            adversaries: BTreeSet::new(),
            unresolved: Some(err),
        }
    }
}

/// An AS on both ends of the circuit can correlate its traffic.
pub fn mark_safety(exposure: &ExposureSets) -> SafetyVerdict {
    let adversaries: BTreeSet<AsNumber> = exposure.src_en.intersection(&exposure.ex_dst).copied().collect();
    SafetyVerdict {
        safe: adversaries.is_empty(),
        adversaries,
        unresolved: None,
    }
}

/// Exposure of `circuit` for `request` under the full adversary.
pub fn compute_exposure(
    circuit: &Circuit,
    request: &ConnectionRequest,
    ctx: &ExposureContext<'_>,
) -> Result<ExposureSets, ExposureError> {
    compute_exposure_with(circuit, request, ctx, AdversaryModel::AsymmetricHijack)
}

pub fn compute_exposure_with(
    circuit: &Circuit,
    request: &ConnectionRequest,
    ctx: &ExposureContext<'_>,
    model: AdversaryModel,
) -> Result<ExposureSets, ExposureError> {
    let ends = Endpoints::resolve(circuit, request, ctx)?;
    let suspects = match model {
        AdversaryModel::AsymmetricHijack => SuspectSets::from_alerts(ctx.alerts, &ends),
        _ => SuspectSets::default(),
    };
    Ok(exposure_from(ctx.paths, &ends, &suspects, model))
}

/// Builds the two exposure sets from resolved endpoints and suspects.
pub fn exposure_from(paths: &PathOracle<'_>, ends: &Endpoints, suspects: &SuspectSets, model: AdversaryModel) -> ExposureSets {
    let (mut src_en, basis_a) = side(paths, ends.src, ends.entry, suspects.src.iter().chain(&suspects.entry), model);
    let (mut ex_dst, basis_b) = side(paths, ends.exit, ends.dst, suspects.exit.iter().chain(&suspects.dst), model);
    src_en.extend([ends.src, ends.entry]);
    ex_dst.extend([ends.exit, ends.dst]);
    ExposureSets {
        src_en,
        ex_dst,
        basis: basis_a.combine(basis_b),
    }
}

/// One end of the circuit: the path between `a` and `b`, plus for every
/// suspect `h` the paths joining `h` to both `a` and `b`.
fn side<'h>(
    paths: &PathOracle<'_>,
    a: AsNumber,
    b: AsNumber,
    suspects: impl Iterator<Item = &'h AsNumber>,
    model: AdversaryModel,
) -> (BTreeSet<AsNumber>, PredictionBasis) {
    let base = match model {
        AdversaryModel::ForwardOnly => paths.predict(a, b),
        _ => paths.bidirectional(a, b),
    };
    let mut ases = base.ases;
    let mut basis = base.basis;
    for &h in suspects {
        ases.insert(h);
        for end in [a, b] {
            let p = paths.bidirectional(h, end);
            ases.extend(p.ases);
            basis = basis.combine(p.basis);
        }
    }
    (ases, basis)
}
