// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! Active adversaries: MOAS anomaly feeds and exact-prefix hijack/interception
//! feasibility under the Gao-Rexford model.

mod hijack;
mod moas;

pub use hijack::{
    attack_success_matrix, hijack_feasible, intercept_feasible, AttackKind, AttackOutcome,
    AttackState, AttackTally, HijackScenario, RiskError, SuccessMatrix,
};
pub use moas::{ingest_moas, suspects_for, AlertFeed, MoasAlert, MoasError};
