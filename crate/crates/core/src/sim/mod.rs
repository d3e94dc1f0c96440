// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! Desk-scale replay of client models over recorded workloads, with the
//! vulnerability and relay-usage metrics computed from the replay.

mod accuracy;
mod compare;
mod replay;
mod workload;

pub use accuracy::{path_accuracy_report, AccuracyReport, AccuracyRow};
pub use compare::{compare_adversary_models, ModelComparison};
pub use replay::{run_simulation, ClientModel, ModelKind, Outcome, ServedRequest, SimInputs, SimReport, SimRun, TraceRecord};
pub use workload::{
    default_ports, generate_mixed_workload, generate_web_workload, read_workload, write_workload, WebWorkloadOptions,
    WorkloadKind, WorkloadStream,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("{file} line {line}: {message}")]
    Parse {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
