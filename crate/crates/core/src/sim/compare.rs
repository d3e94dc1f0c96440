// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use super::replay::SimRun;
use crate::client::{compute_exposure_with, mark_safety, AdversaryModel, ExposureContext};
use crate::pathcache::PathOracle;

/// Vulnerability of one replay judged by two adversaries that differ only in
/// whether reverse paths count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelComparison {
    pub requests: usize,
    pub forward_only_vulnerable: usize,
    pub asymmetric_vulnerable: usize,
    /// Requests safe under the forward-only view but vulnerable once reverse
    /// paths are included.
    pub hidden_by_forward_view: usize,
}

impl ModelComparison {
    fn fraction(&self, n: usize) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            n as f64 / self.requests as f64
        }
    }

    pub fn forward_only_fraction(&self) -> f64 {
        self.fraction(self.forward_only_vulnerable)
    }

    pub fn asymmetric_fraction(&self) -> f64 {
        self.fraction(self.asymmetric_vulnerable)
    }

    /// How much the forward-only view under-reports.
    pub fn gap(&self) -> f64 {
        self.asymmetric_fraction() - self.forward_only_fraction()
    }

    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "adversary,vulnerable_requests,fraction")?;
        writeln!(out, "forward-only,{},{:.6}", self.forward_only_vulnerable, self.forward_only_fraction())?;
        writeln!(out, "asymmetric,{},{:.6}", self.asymmetric_vulnerable, self.asymmetric_fraction())?;
        writeln!(out, "gap,{},{:.6}", self.hidden_by_forward_view, self.gap())
    }
}

/// Re-judges every served request of `run` under the forward-only and the
/// asymmetric adversary. Neither uses hijack alerts. Requests whose endpoints
/// do not resolve count as vulnerable under both.
pub fn compare_adversary_models(run: &SimRun, paths: &PathOracle<'_>) -> ModelComparison {
    let ctx = ExposureContext { paths, alerts: &[] };
    let mut out = ModelComparison::default();
    for s in &run.served {
        let judge = |model| {
            compute_exposure_with(&s.circuit, &s.request, &ctx, model)
                .map(|e| !mark_safety(&e).safe)
                .unwrap_or(true)
        };
        let forward = judge(AdversaryModel::ForwardOnly);
        let asymmetric = judge(AdversaryModel::Asymmetric);
        out.requests += 1;
        out.forward_only_vulnerable += usize::from(forward);
        out.asymmetric_vulnerable += usize::from(asymmetric);
        out.hidden_by_forward_view += usize::from(asymmetric && !forward);
    }
    out
}
