// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};

use super::SimError;
use crate::pathcache::{PathOracle, PredictionBasis};
use crate::topology::{AsNumber, AsPath};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyRow {
    pub src: AsNumber,
    pub dst: AsNumber,
    pub basis: PredictionBasis,
    /// Predicted ASes absent from the true path.
    pub over: usize,
    /// True-path ASes the prediction missed.
    pub under: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
    pub skipped: usize,
}

impl AccuracyReport {
    /// Counts per (basis, metric, number of ASes).
    pub fn histogram(&self) -> BTreeMap<(PredictionBasis, &'static str, usize), usize> {
        let mut h = BTreeMap::new();
        for r in &self.rows {
            *h.entry((r.basis, "over", r.over)).or_default() += 1;
            *h.entry((r.basis, "under", r.under)).or_default() += 1;
        }
        h
    }

    pub fn rows_with(&self, basis: PredictionBasis) -> impl Iterator<Item = &AccuracyRow> {
        self.rows.iter().filter(move |r| r.basis == basis)
    }

    /// `basis,metric,ases,rows`.
    pub fn write_histogram_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "basis,metric,ases,rows")?;
        for ((basis, metric, ases), n) in self.histogram() {
            writeln!(out, "{},{metric},{ases},{n}", basis.as_str())?;
        }
        Ok(())
    }

    /// One line per compared pair.
    pub fn write_rows_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "src_asn,dst_asn,basis,over,under")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.src, r.dst, r.basis.as_str(), r.over, r.under)?;
        }
        Ok(())
    }
}

/// Compares predicted AS sets with known paths read as CSV
/// `src_asn,dst_asn,path`, the path written as hyphen-separated AS numbers.
/// Rows naming an AS unknown to the topology are skipped.
pub fn path_accuracy_report(paths: &PathOracle<'_>, truth: impl Read) -> Result<AccuracyReport, SimError> {
    let mut report = AccuracyReport::default();
    for (i, line) in BufReader::new(truth).lines().enumerate() {
        let n = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("src_asn") {
            continue;
        }
        let err = |message: String| SimError::Parse {
            file: "truth paths",
            line: n,
            message,
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", f.len())));
        }
        let src: AsNumber = f[0].parse().map_err(err)?;
        let dst: AsNumber = f[1].parse().map_err(err)?;
        let path: AsPath = f[2].parse().map_err(err)?;
        let topo = paths.topology();
        if !topo.contains(src) || !topo.contains(dst) {
            log::warn!("truth paths line {n}: AS{src} or AS{dst} not in topology, skipped");
            report.skipped += 1;
            continue;
        }
        let truth: BTreeSet<AsNumber> = path.hops().iter().copied().collect();
        let predicted = paths.predict(src, dst);
        report.rows.push(AccuracyRow {
            src,
            dst,
            basis: predicted.basis,
            over: predicted.ases.difference(&truth).count(),
            under: truth.difference(&predicted.ases).count(),
        });
    }
    Ok(report)
}
