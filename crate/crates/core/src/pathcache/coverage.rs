// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::Write;

use super::{stitch_ases, GraphUpdateBundle};
use crate::topology::AsNumber;

/// One path query, tagged with the bucket it is reported under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageQuery {
    pub src: AsNumber,
    pub dst: AsNumber,
    pub bucket: String,
}

impl CoverageQuery {
    pub fn new(src: AsNumber, dst: AsNumber, bucket: impl Into<String>) -> Self {
        CoverageQuery {
            src,
            dst,
            bucket: bucket.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub bucket: String,
    pub queries: usize,
    pub measured: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Per-bucket rows in bucket order, followed by the `all` row.
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn overall(&self) -> &CoverageRow {
        self.rows.last().expect("report always has an overall row")
    }

    pub fn bucket(&self, name: &str) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.bucket == name)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "bucket,queries,measured,fraction")?;
        for row in &self.rows {
            writeln!(out, "{},{},{},{:.6}", row.bucket, row.queries, row.measured, row.fraction)?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("coverage needs at least one query")]
pub struct EmptyQueryList;

/// Fraction of queries the bundle answers from measured graphs.
pub fn coverage_stats(
    bundle: &GraphUpdateBundle,
    queries: &[CoverageQuery],
) -> Result<CoverageReport, EmptyQueryList> {
    if queries.is_empty() {
        return Err(EmptyQueryList);
    }
    let mut buckets: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut total = (0usize, 0usize);
    for q in queries {
        let hit = stitch_ases(bundle, q.src, q.dst).is_some() as usize;
        let slot = buckets.entry(q.bucket.as_str()).or_default();
        slot.0 += 1;
        slot.1 += hit;
        total.0 += 1;
        total.1 += hit;
    }
    let row = |bucket: &str, (queries, measured): (usize, usize)| CoverageRow {
        bucket: bucket.to_string(),
        queries,
        measured,
        fraction: measured as f64 / queries as f64,
    };
    let mut rows: Vec<CoverageRow> = buckets.into_iter().map(|(b, c)| row(b, c)).collect();
    rows.push(row("all", total));
    Ok(CoverageReport { rows })
}

/// Labels relay bandwidths by percentile band, e.g. `p0-p50`, `p50-p90`, `p90-p100`.
#[derive(Debug, Clone)]
pub struct BandwidthBuckets {
    cuts: Vec<(u8, u64)>,
}

impl BandwidthBuckets {
    /// `percentiles` are the inner cut points in (0, 100), ascending.
    pub fn new(bandwidths: &[u64], percentiles: &[u8]) -> Self {
        let mut sorted = bandwidths.to_vec();
        sorted.sort_unstable();
        let cuts = percentiles
            .iter()
            .filter(|p| **p > 0 && **p < 100)
            .map(|&p| {
                let value = if sorted.is_empty() {
                    0
                } else {
                    // nearest-rank percentile
                    let rank = (f64::from(p) / 100.0 * sorted.len() as f64).ceil() as usize;
                    sorted[rank.clamp(1, sorted.len()) - 1]
                };
                (p, value)
            })
            .collect();
        BandwidthBuckets { cuts }
    }

    pub fn label(&self, bandwidth: u64) -> String {
        let mut lower = 0u8;
        for &(p, value) in &self.cuts {
            if bandwidth <= value {
                return format!("p{lower}-p{p}");
            }
            lower = p;
        }
        format!("p{lower}-p100")
    }
}
