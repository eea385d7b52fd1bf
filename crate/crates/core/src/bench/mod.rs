//! Benchmark driver: cold/hot sweeps against a running gateway, summaries
//! and report files.

pub mod report;
pub mod summary;
pub mod sweep;

pub use report::{emit, read_records, read_summary_csv, render, write_records, Format};
pub use summary::{geometric_mean, percentile, summarize, CellSummary, CrossBackend, Report};
pub use sweep::{run_sweep, Axis, BenchError, Driver, RunRecord, SweepOutcome, SweepSpec};
