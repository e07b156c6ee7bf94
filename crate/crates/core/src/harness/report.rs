//! JSON and CSV report writers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BenchRecord, SolverKind};

/// Schema tag written into every report.
pub const REPORT_FORMAT: &str = "aakmeans-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub solver: SolverKind,
    pub m0: usize,
    pub baseline: SolverKind,
    pub pairs: usize,
    /// Pairs where this solver needed strictly fewer iterations.
    pub iter_wins: usize,
    /// Pairs where this solver was strictly faster.
    pub time_wins: usize,
    /// Mean of `(base - this) / base` over total iterations.
    pub mean_iter_reduction: f64,
    pub median_iter_reduction: f64,
    pub mean_time_reduction: f64,
    /// Largest `|mse - base_mse| / base_mse` over the pairs.
    pub max_rel_mse_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub format: String,
    pub records: Vec<BenchRecord>,
    pub summary: Vec<PairSummary>,
    /// Largest relative MSE difference of any solver against the baseline.
    pub max_rel_mse_discrepancy: f64,
}

fn reduction(base: f64, other: f64) -> f64 {
    if base > 0.0 {
        (base - other) / base
    } else {
        0.0
    }
}

fn rel_diff(base: f64, other: f64) -> f64 {
    let d = (other - base).abs();
    if base != 0.0 {
        d / base.abs()
    } else {
        d
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl Comparison {
    /// `records` holds one group of `per_seed` records per seed, the
    /// baseline first in each group.
    pub fn from_records(records: Vec<BenchRecord>, per_seed: usize) -> Self {
        let groups: Vec<&[BenchRecord]> = records.chunks(per_seed).collect();
        let summary: Vec<PairSummary> = (1..per_seed)
            .map(|s| {
                let pairs: Vec<(&BenchRecord, &BenchRecord)> =
                    groups.iter().map(|g| (&g[0], &g[s])).collect();
                let iter_red: Vec<f64> = pairs
                    .iter()
                    .map(|(b, o)| reduction(b.total_iters as f64, o.total_iters as f64))
                    .collect();
                let n = pairs.len().max(1) as f64;
                PairSummary {
                    solver: groups[0][s].solver,
                    m0: groups[0][s].m0,
                    baseline: groups[0][0].solver,
                    pairs: pairs.len(),
                    iter_wins: pairs
                        .iter()
                        .filter(|(b, o)| o.total_iters < b.total_iters)
                        .count(),
                    time_wins: pairs
                        .iter()
                        .filter(|(b, o)| o.elapsed_seconds < b.elapsed_seconds)
                        .count(),
                    mean_iter_reduction: iter_red.iter().sum::<f64>() / n,
                    median_iter_reduction: median(iter_red),
                    mean_time_reduction: pairs
                        .iter()
                        .map(|(b, o)| reduction(b.elapsed_seconds, o.elapsed_seconds))
                        .sum::<f64>()
                        / n,
                    max_rel_mse_diff: pairs
                        .iter()
                        .map(|(b, o)| rel_diff(b.mse, o.mse))
                        .fold(0.0, f64::max),
                }
            })
            .collect();
        let max_rel_mse_discrepancy = summary
            .iter()
            .map(|s| s.max_rel_mse_diff)
            .fold(0.0, f64::max);
        Self {
            format: REPORT_FORMAT.to_owned(),
            records,
            summary,
            max_rel_mse_discrepancy,
        }
    }

    pub fn write_json(&self, out: &mut impl Write) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)
    }

    /// Records table, a blank line, then the summary table.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        write_records_csv(&self.records, out)?;
        writeln!(out)?;
        writeln!(
            out,
            "format,solver,m0,baseline,pairs,iter_wins,time_wins,mean_iter_reduction,median_iter_reduction,mean_time_reduction,max_rel_mse_diff"
        )?;
        for s in &self.summary {
            writeln!(
                out,
                "{REPORT_FORMAT},{},{},{},{},{},{},{},{},{},{}",
                s.solver,
                s.m0,
                s.baseline,
                s.pairs,
                s.iter_wins,
                s.time_wins,
                s.mean_iter_reduction,
                s.median_iter_reduction,
                s.mean_time_reduction,
                s.max_rel_mse_diff
            )?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    format: &'static str,
    records: &'a [BenchRecord],
}

pub fn write_records_json(records: &[BenchRecord], out: &mut impl Write) -> std::io::Result<()> {
    let report = RunReport {
        format: REPORT_FORMAT,
        records,
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)
}

pub const CSV_HEADER: &str =
    "format,dataset,solver,m0,seed,accepted_iters,total_iters,elapsed_seconds,mse,converged,init_digest,energy_trace";

/// One row per record. The energy trace, when present, is a
/// semicolon-separated list in the last column.
pub fn write_records_csv(records: &[BenchRecord], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let trace = r
            .energy_trace
            .as_ref()
            .map(|t| t.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        writeln!(
            out,
            "{REPORT_FORMAT},{},{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.solver,
            r.m0,
            r.seed,
            r.accepted_iters,
            r.total_iters,
            r.elapsed_seconds,
            r.mse,
            r.converged,
            r.init_digest,
            trace
        )?;
    }
    Ok(())
}
