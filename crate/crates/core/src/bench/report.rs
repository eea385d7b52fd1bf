//! Report files.
//!
//! A sweep directory holds:
//!
//! * `records.csv`: one row per request, columns
//!   `backend,axis,value,repetition,processing_s,e2e_s,cold`.
//! * `summary.csv`: one row per (backend, value) cell, columns
//!   `backend,axis,value,cold_e2e_s,cold_processing_s,hot_runs,hot_gmean_e2e_s,hot_gmean_processing_s,hot_mean_e2e_s,p50_e2e_s,p95_e2e_s,p99_e2e_s,cold_hot_ratio`.
//!   Empty fields are missing values.
//! * `report.json`: the full [`Report`].
//! * `<backend>.dat`: whitespace-separated `value cold_e2e_s hot_gmean_e2e_s hot_gmean_processing_s`
//!   for plotting, `NaN` where missing.

use std::fs;
use std::path::{Path, PathBuf};

use super::summary::{CellSummary, Report};
use super::sweep::{BenchError, RunRecord};

pub const RECORDS_CSV: &str = "records.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const REPORT_JSON: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Gnuplot,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Format {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

pub fn write_records(dir: &Path, records: &[RunRecord]) -> Result<PathBuf, BenchError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(RECORDS_CSV);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    for r in records {
        w.serialize(r).map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let path = dir.join(RECORDS_CSV);
    let mut r = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    r.deserialize()
        .collect::<Result<Vec<RunRecord>, _>>()
        .map_err(csv_err(&path))
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<CellSummary>, BenchError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<Result<Vec<CellSummary>, _>>()
        .map_err(csv_err(path))
}

fn nan_or(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_owned(), |x| x.to_string())
}

/// Writes the report in each requested format and returns the paths written.
pub fn emit(report: &Report, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, BenchError> {
    if report.cells.is_empty() {
        return Err(BenchError::Spec("empty report".into()));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            Format::Csv => {
                let path = dir.join(SUMMARY_CSV);
                let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
                for c in &report.cells {
                    w.serialize(c).map_err(csv_err(&path))?;
                }
                w.flush().map_err(io_err(&path))?;
                written.push(path);
            }
            Format::Json => {
                let path = dir.join(REPORT_JSON);
                let text = serde_json::to_string_pretty(report).expect("report serializes");
                fs::write(&path, text).map_err(io_err(&path))?;
                written.push(path);
            }
            Format::Gnuplot => {
                let mut backends: Vec<&str> = Vec::new();
                for c in &report.cells {
                    if !backends.contains(&c.backend.as_str()) {
                        backends.push(&c.backend);
                    }
                }
                for b in backends {
                    let path = dir.join(format!("{b}.dat"));
                    let mut text = String::from("# value cold_e2e_s hot_gmean_e2e_s hot_gmean_processing_s\n");
                    for c in report.cells.iter().filter(|c| c.backend == b) {
                        text.push_str(&format!(
                            "{} {} {} {}\n",
                            c.value,
                            nan_or(c.cold_e2e_s),
                            nan_or(c.hot_gmean_e2e_s),
                            nan_or(c.hot_gmean_processing_s)
                        ));
                    }
                    fs::write(&path, text).map_err(io_err(&path))?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}

/// Human-readable table of the report.
pub fn render(report: &Report) -> String {
    let f = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{x:.6}"));
    let mut out = format!("{}\n\n", report.note);
    out.push_str(&format!(
        "{:<12} {:>6} {:>10} {:>12} {:>12} {:>12} {:>12} {:>9}\n",
        "backend", "axis", "value", "cold_e2e_s", "hot_gmean_s", "p95_s", "hot_proc_s", "cold/hot"
    ));
    for c in &report.cells {
        out.push_str(&format!(
            "{:<12} {:>6} {:>10} {:>12} {:>12} {:>12} {:>12} {:>9}\n",
            c.backend,
            c.axis.to_string(),
            c.value,
            f(c.cold_e2e_s),
            f(c.hot_gmean_e2e_s),
            f(c.p95_e2e_s),
            f(c.hot_gmean_processing_s),
            c.cold_hot_ratio.map_or_else(|| "-".to_owned(), |x| format!("{x:.2}")),
        ));
    }
    out.push('\n');
    for cmp in &report.comparisons {
        out.push_str(&format!(
            "{}={}: cold slowest/fastest = {} ({} / {}), hot = {}\n",
            cmp.axis,
            cmp.value,
            cmp.cold_e2e_ratio.map_or_else(|| "-".to_owned(), |x| format!("{x:.1}x")),
            cmp.slowest_cold.as_deref().unwrap_or("-"),
            cmp.fastest_cold.as_deref().unwrap_or("-"),
            cmp.hot_e2e_ratio.map_or_else(|| "-".to_owned(), |x| format!("{x:.1}x")),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::summary::summarize;
    use crate::bench::sweep::Axis;

    #[test]
    fn unwritable_path_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let records = vec![RunRecord {
            backend: "a".into(),
            axis: Axis::Batch,
            value: 1,
            repetition: 0,
            processing_s: 0.1,
            e2e_s: 0.2,
            cold: true,
        }];
        let report = summarize(&records);
        let err = emit(&report, &blocker.join("sub"), &[Format::Json]).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
