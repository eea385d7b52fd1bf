//! Append-only request log behind `/v1/metrics`.

use std::collections::BTreeMap;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// One served request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub backend: String,
    pub options: usize,
    pub paths: u64,
    pub sub_batches: usize,
    pub processing_s: f64,
    pub e2e_s: f64,
    pub cold: bool,
    pub failed_options: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl LatencySummary {
    fn from_samples(mut xs: Vec<f64>) -> Self {
        if xs.is_empty() {
            return Self::default();
        }
        xs.sort_by(f64::total_cmp);
        let rank = |q: f64| xs[((q * xs.len() as f64).ceil() as usize).clamp(1, xs.len()) - 1];
        Self {
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            p50: rank(0.50),
            p95: rank(0.95),
            max: xs[xs.len() - 1],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendMetrics {
    pub requests: u64,
    pub cold_requests: u64,
    pub options: u64,
    pub failed_options: u64,
    pub processing_s: LatencySummary,
    pub e2e_s: LatencySummary,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub requests: u64,
    pub backends: BTreeMap<String, BackendMetrics>,
}

/// Many writers send records over a channel; readers drain it on snapshot.
pub struct MetricsSink {
    tx: Mutex<Sender<RequestRecord>>,
    rx: Mutex<Receiver<RequestRecord>>,
    log: Mutex<Vec<RequestRecord>>,
}

impl Default for MetricsSink {
    fn default() -> Self {
        let (tx, rx) = channel();
        Self {
            tx: Mutex::new(tx),
            rx: Mutex::new(rx),
            log: Mutex::new(Vec::new()),
        }
    }
}

impl MetricsSink {
    pub fn sender(&self) -> Sender<RequestRecord> {
        self.tx.lock().expect("metrics lock").clone()
    }

    pub fn record(&self, r: RequestRecord) {
        // The receiver lives as long as the sink, so send cannot fail.
        let _ = self.sender().send(r);
    }

    /// All records so far, in arrival order.
    pub fn records(&self) -> Vec<RequestRecord> {
        let rx = self.rx.lock().expect("metrics lock");
        let mut log = self.log.lock().expect("metrics lock");
        log.extend(rx.try_iter());
        log.clone()
    }

    pub fn snapshot(&self) -> MetricsSnapshot {
        let records = self.records();
        let mut grouped: BTreeMap<String, Vec<&RequestRecord>> = BTreeMap::new();
        for r in &records {
            grouped.entry(r.backend.clone()).or_default().push(r);
        }
        let backends = grouped
            .into_iter()
            .map(|(name, rs)| {
                let m = BackendMetrics {
                    requests: rs.len() as u64,
                    cold_requests: rs.iter().filter(|r| r.cold).count() as u64,
                    options: rs.iter().map(|r| r.options as u64).sum(),
                    failed_options: rs.iter().map(|r| r.failed_options as u64).sum(),
                    processing_s: LatencySummary::from_samples(
                        rs.iter().map(|r| r.processing_s).collect(),
                    ),
                    e2e_s: LatencySummary::from_samples(rs.iter().map(|r| r.e2e_s).collect()),
                };
                (name, m)
            })
            .collect();
        MetricsSnapshot {
            requests: records.len() as u64,
            backends,
        }
    }
}
