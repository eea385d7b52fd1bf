//! Per-cell cold/hot statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::sweep::{Axis, RunRecord};

pub const REPORT_NOTE: &str = "Timings come from simulated and modeled backends on the host that ran the sweep. \
They validate trends and configured cold/hot ratios; they are not measurements of real accelerator hardware.";

pub fn geometric_mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() || xs.iter().any(|&x| x.is_nan() || x <= 0.0) {
        return None;
    }
    Some((xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp())
}

pub fn arithmetic_mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Nearest-rank percentile, `q` in (0, 1].
pub fn percentile(xs: &[f64], q: f64) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

/// Statistics for one (backend, axis value). Absent values mean the cell had
/// no usable record of that kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub backend: String,
    pub axis: Axis,
    pub value: u64,
    pub cold_e2e_s: Option<f64>,
    pub cold_processing_s: Option<f64>,
    pub hot_runs: usize,
    pub hot_gmean_e2e_s: Option<f64>,
    pub hot_gmean_processing_s: Option<f64>,
    pub hot_mean_e2e_s: Option<f64>,
    pub p50_e2e_s: Option<f64>,
    pub p95_e2e_s: Option<f64>,
    pub p99_e2e_s: Option<f64>,
    /// Cold E2E over hot geometric-mean E2E.
    pub cold_hot_ratio: Option<f64>,
}

impl CellSummary {
    pub fn is_missing(&self) -> bool {
        self.cold_e2e_s.is_none() && self.hot_runs == 0
    }
}

/// Best and worst backend at one axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossBackend {
    pub axis: Axis,
    pub value: u64,
    pub fastest_cold: Option<String>,
    pub slowest_cold: Option<String>,
    /// Slowest cold E2E over fastest cold E2E.
    pub cold_e2e_ratio: Option<f64>,
    pub fastest_hot: Option<String>,
    pub slowest_hot: Option<String>,
    /// Slowest hot geometric-mean E2E over the fastest.
    pub hot_e2e_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub note: String,
    pub cells: Vec<CellSummary>,
    pub comparisons: Vec<CrossBackend>,
}

impl Report {
    pub fn cell(&self, backend: &str, value: u64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.backend == backend && c.value == value)
    }
}

fn summarize_cell(backend: &str, axis: Axis, value: u64, records: &[&RunRecord]) -> CellSummary {
    let cold = records.iter().find(|r| r.cold);
    let hot_e2e: Vec<f64> = records.iter().filter(|r| !r.cold).map(|r| r.e2e_s).collect();
    let hot_proc: Vec<f64> = records
        .iter()
        .filter(|r| !r.cold)
        .map(|r| r.processing_s)
        .collect();
    let gmean = geometric_mean(&hot_e2e);
    CellSummary {
        backend: backend.to_owned(),
        axis,
        value,
        cold_e2e_s: cold.map(|r| r.e2e_s),
        cold_processing_s: cold.map(|r| r.processing_s),
        hot_runs: hot_e2e.len(),
        hot_gmean_e2e_s: gmean,
        hot_gmean_processing_s: geometric_mean(&hot_proc),
        hot_mean_e2e_s: arithmetic_mean(&hot_e2e),
        p50_e2e_s: percentile(&hot_e2e, 0.50),
        p95_e2e_s: percentile(&hot_e2e, 0.95),
        p99_e2e_s: percentile(&hot_e2e, 0.99),
        cold_hot_ratio: match (cold, gmean) {
            (Some(c), Some(h)) => Some(c.e2e_s / h),
            _ => None,
        },
    }
}

fn extremes<'a>(items: impl Iterator<Item = (&'a str, Option<f64>)>) -> (Option<String>, Option<String>, Option<f64>) {
    let present: Vec<(&str, f64)> = items.filter_map(|(b, v)| v.map(|v| (b, v))).collect();
    let min = present.iter().min_by(|a, b| a.1.total_cmp(&b.1));
    let max = present.iter().max_by(|a, b| a.1.total_cmp(&b.1));
    match (min, max) {
        (Some(lo), Some(hi)) => (Some(lo.0.to_owned()), Some(hi.0.to_owned()), Some(hi.1 / lo.1)),
        _ => (None, None, None),
    }
}

/// Groups records into cells. Every backend seen is reported at every axis
/// value seen; combinations without records are kept as missing cells.
pub fn summarize(records: &[RunRecord]) -> Report {
    let mut grouped: BTreeMap<(String, Axis, u64), Vec<&RunRecord>> = BTreeMap::new();
    let mut backends: Vec<String> = Vec::new();
    let mut values: BTreeSet<(Axis, u64)> = BTreeSet::new();
    for r in records {
        if !backends.contains(&r.backend) {
            backends.push(r.backend.clone());
        }
        values.insert((r.axis, r.value));
        grouped
            .entry((r.backend.clone(), r.axis, r.value))
            .or_default()
            .push(r);
    }

    let mut cells = Vec::new();
    for b in &backends {
        for &(axis, value) in &values {
            let rs = grouped
                .get(&(b.clone(), axis, value))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            cells.push(summarize_cell(b, axis, value, rs));
        }
    }

    let comparisons = values
        .iter()
        .map(|&(axis, value)| {
            let at: Vec<&CellSummary> = cells
                .iter()
                .filter(|c| c.axis == axis && c.value == value)
                .collect();
            let (fastest_cold, slowest_cold, cold_e2e_ratio) =
                extremes(at.iter().map(|c| (c.backend.as_str(), c.cold_e2e_s)));
            let (fastest_hot, slowest_hot, hot_e2e_ratio) =
                extremes(at.iter().map(|c| (c.backend.as_str(), c.hot_gmean_e2e_s)));
            CrossBackend {
                axis,
                value,
                fastest_cold,
                slowest_cold,
                cold_e2e_ratio,
                fastest_hot,
                slowest_hot,
                hot_e2e_ratio,
            }
        })
        .collect();

    Report {
        note: REPORT_NOTE.to_owned(),
        cells,
        comparisons,
    }
}
