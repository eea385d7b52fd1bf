mod common;

use common::{gateway_of, start_gateway};
use mcaas_core::bench::summary::arithmetic_mean;
use mcaas_core::bench::{
    emit, geometric_mean, read_records, read_summary_csv, run_sweep, summarize, write_records,
    Axis, BenchError, Format, Report, SweepSpec,
};
use mcaas_core::gateway::BackendProfile;
use proptest::prelude::*;

fn spec(backends: &[&str]) -> SweepSpec {
    SweepSpec {
        axis: Axis::Paths,
        values: vec![100, 1_000, 5_000],
        paths: 1_000,
        batch: 3,
        backends: backends.iter().map(|s| s.to_string()).collect(),
        repetitions: 5,
        concurrency: 2,
        seed_base: 1,
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn sweep_counts_and_orders_records() {
    let gw = start_gateway(gateway_of(vec![
        ("cpu", BackendProfile::local_cpu(), 2),
        ("m", BackendProfile::modeled(0.001, 0.0), 2),
    ]))
    .await;
    let s = spec(&["cpu", "m"]);
    let out = run_sweep(&s, &gw.url()).await.unwrap();
    assert_eq!(out.dropped, 0);
    assert_eq!(out.records.len(), 2 * 3 * (1 + 5));
    for cell in out.records.chunks(6) {
        assert!(cell[0].cold && cell[0].repetition == 0, "{:?}", cell[0]);
        assert!(cell[1..].iter().all(|r| !r.cold));
        assert_eq!(cell.iter().map(|r| r.repetition).collect::<Vec<_>>(), [0, 1, 2, 3, 4, 5]);
        assert!(cell.iter().all(|r| r.backend == cell[0].backend && r.value == cell[0].value));
        assert!(cell.iter().all(|r| r.e2e_s >= r.processing_s && r.processing_s > 0.0));
    }

    let report = summarize(&out.records);
    assert_eq!(report.cells.len(), 6);
    for c in &report.cells {
        assert_eq!(c.hot_runs, 5);
        assert!(c.hot_mean_e2e_s.unwrap() >= c.hot_gmean_e2e_s.unwrap());
        assert!(c.p50_e2e_s.unwrap() <= c.p95_e2e_s.unwrap());
        assert!(c.p95_e2e_s.unwrap() <= c.p99_e2e_s.unwrap());
    }
    assert_eq!(report.comparisons.len(), 3);
}

#[tokio::test]
async fn unreachable_target_is_reported() {
    let err = run_sweep(&spec(&["cpu"]), "http://127.0.0.1:9").await.unwrap_err();
    assert!(matches!(err, BenchError::Unreachable { .. }), "{err}");
}

#[tokio::test]
async fn unknown_backend_is_rejected() {
    let gw = start_gateway(gateway_of(vec![("cpu", BackendProfile::local_cpu(), 1)])).await;
    let err = run_sweep(&spec(&["gpu"]), &gw.url()).await.unwrap_err();
    assert!(matches!(err, BenchError::Rejected { .. }), "{err}");
}

#[test]
fn invalid_spec_is_rejected_before_any_request() {
    let mut s = spec(&["cpu"]);
    s.values = vec![5, 1];
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let err = rt.block_on(run_sweep(&s, "http://127.0.0.1:9")).unwrap_err();
    assert!(matches!(err, BenchError::Spec(_)), "{err}");
}

#[tokio::test(flavor = "multi_thread")]
async fn csv_json_and_records_agree() {
    let gw = start_gateway(gateway_of(vec![("cpu", BackendProfile::local_cpu(), 2)])).await;
    let out = run_sweep(&spec(&["cpu"]), &gw.url()).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_records(dir.path(), &out.records).unwrap();
    assert_eq!(read_records(dir.path()).unwrap(), out.records);

    let report = summarize(&out.records);
    let written = emit(&report, dir.path(), &[Format::Csv, Format::Json, Format::Gnuplot]).unwrap();
    assert_eq!(written.len(), 3);
    let from_csv = read_summary_csv(&dir.path().join("summary.csv")).unwrap();
    let from_json: Report =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(from_json, report);
    assert_eq!(from_csv.len(), report.cells.len());
    for (a, b) in from_csv.iter().zip(&report.cells) {
        assert_eq!(a.backend, b.backend);
        assert_eq!(a.value, b.value);
        assert_eq!(a.hot_runs, b.hot_runs);
        for (x, y) in [
            (a.cold_e2e_s, b.cold_e2e_s),
            (a.hot_gmean_e2e_s, b.hot_gmean_e2e_s),
            (a.p95_e2e_s, b.p95_e2e_s),
            (a.cold_hot_ratio, b.cold_hot_ratio),
        ] {
            assert_eq!(x, y);
        }
    }
    let dat = std::fs::read_to_string(dir.path().join("cpu.dat")).unwrap();
    assert_eq!(dat.lines().count(), 1 + 3);
}

proptest! {
    #[test]
    fn arithmetic_mean_dominates_geometric(xs in prop::collection::vec(1e-6f64..1e3, 1..50)) {
        let am = arithmetic_mean(&xs).unwrap();
        let gm = geometric_mean(&xs).unwrap();
        prop_assert!(am >= gm * (1.0 - 1e-12), "am {} gm {}", am, gm);
    }
}
