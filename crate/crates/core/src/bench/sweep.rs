//! Load generator.
//!
//! For every (backend, axis value) cell the sweep restarts the backend's
//! workers, sends one request against the fresh stack (the cold record),
//! warms any workers the cold request did not reach, and then sends
//! `repetitions` hot requests.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::task::JoinSet;

use crate::gateway::PriceResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Paths,
    Batch,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Paths => "paths",
            Axis::Batch => "batch",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paths" => Ok(Axis::Paths),
            "batch" => Ok(Axis::Batch),
            other => Err(format!("unknown axis {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<u64>,
    /// Paths per option when the axis is `Batch`.
    pub paths: u64,
    /// Options per request when the axis is `Paths`.
    pub batch: u64,
    pub backends: Vec<String>,
    pub repetitions: usize,
    pub concurrency: usize,
    pub seed_base: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            axis: Axis::Batch,
            values: vec![1, 10, 100],
            paths: 500_000,
            batch: 1,
            backends: vec![],
            repetitions: 100,
            concurrency: 1,
            seed_base: 1,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Spec(m));
        if self.values.is_empty() {
            return bad("values must not be empty".into());
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("values must be strictly increasing: {:?}", self.values));
        }
        if self.values[0] == 0 {
            return bad("values must be >= 1".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        if self.backends.is_empty() {
            return bad("at least one backend is required".into());
        }
        if self.paths == 0 || self.batch == 0 {
            return bad("paths and batch must be >= 1".into());
        }
        Ok(())
    }

    /// (paths, batch) for a cell.
    pub fn cell(&self, value: u64) -> (u64, u64) {
        match self.axis {
            Axis::Paths => (value, self.batch),
            Axis::Batch => (self.paths, value),
        }
    }
}

/// One measured request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub backend: String,
    pub axis: Axis,
    pub value: u64,
    /// 0 for the cold request, 1..=repetitions for hot ones.
    pub repetition: usize,
    pub processing_s: f64,
    pub e2e_s: f64,
    pub cold: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    /// Requests that failed and were left out of `records`.
    pub dropped: usize,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error("service unreachable at {target}: {reason}")]
    Unreachable { target: String, reason: String },
    #[error("service rejected {what}: {reason}")]
    Rejected { what: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
}

/// Body of one benchmark request: `batch` calls with strikes spread around
/// the money.
pub fn request_body(backend: &str, paths: u64, batch: u64, seed_base: u64) -> serde_json::Value {
    let options: Vec<_> = (0..batch)
        .map(|i| {
            serde_json::json!({
                "spot": 100.0,
                "strike": 90.0 + (i % 21) as f64,
                "rate": 0.05,
                "vol": 0.2,
                "expiry": 1.0,
                "kind": "call",
            })
        })
        .collect();
    serde_json::json!({
        "options": options,
        "paths": paths,
        "seed_base": seed_base,
        "backend": backend,
    })
}

/// Issues requests against a running gateway.
#[derive(Clone)]
pub struct Driver {
    http: reqwest::Client,
    target: String,
}

impl Driver {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            http: reqwest::Client::new(),
            target: target.into().trim_end_matches('/').to_owned(),
        }
    }

    pub async fn check(&self) -> Result<(), BenchError> {
        let url = format!("{}/v1/healthz", self.target);
        let unreachable = |reason: String| BenchError::Unreachable {
            target: self.target.clone(),
            reason,
        };
        let resp = self.http.get(&url).send().await.map_err(|e| unreachable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unreachable(format!("healthz returned {}", resp.status())));
        }
        Ok(())
    }

    async fn admin(&self, action: &str, backend: &str) -> Result<(), BenchError> {
        let url = format!("{}/v1/workers/{action}", self.target);
        let resp = self
            .http
            .post(&url)
            .query(&[("backend", backend)])
            .send()
            .await
            .map_err(|e| BenchError::Unreachable {
                target: self.target.clone(),
                reason: e.to_string(),
            })?;
        if !resp.status().is_success() {
            let reason = resp.text().await.unwrap_or_default();
            return Err(BenchError::Rejected {
                what: format!("{action} {backend}"),
                reason,
            });
        }
        Ok(())
    }

    pub async fn restart(&self, backend: &str) -> Result<(), BenchError> {
        self.admin("restart", backend).await
    }

    pub async fn warm(&self, backend: &str) -> Result<(), BenchError> {
        self.admin("warm", backend).await
    }

    /// Sends one pricing request; returns (server processing time,
    /// client-side end-to-end time) on success.
    pub async fn price(&self, body: &serde_json::Value) -> Result<(f64, f64), String> {
        let url = format!("{}/v1/price", self.target);
        let start = Instant::now();
        let resp = self.http.post(&url).json(body).send().await.map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("{status}: {}", resp.text().await.unwrap_or_default()));
        }
        let result: PriceResult = resp.json().await.map_err(|e| e.to_string())?;
        let e2e = start.elapsed().as_secs_f64();
        Ok((result.timing.processing_s, e2e))
    }
}

/// Runs the full sweep. A failing request is dropped and counted; an
/// unreachable service aborts.
pub async fn run_sweep(spec: &SweepSpec, target: &str) -> Result<SweepOutcome, BenchError> {
    spec.validate()?;
    let driver = Driver::new(target);
    driver.check().await?;
    let mut out = SweepOutcome::default();

    for backend in &spec.backends {
        for &value in &spec.values {
            let (paths, batch) = spec.cell(value);
            let body = request_body(backend, paths, batch, spec.seed_base);
            let record = |repetition: usize, (processing_s, e2e_s): (f64, f64)| RunRecord {
                backend: backend.clone(),
                axis: spec.axis,
                value,
                repetition,
                processing_s,
                e2e_s,
                cold: repetition == 0,
            };

            driver.restart(backend).await?;
            match driver.price(&body).await {
                Ok(t) => out.records.push(record(0, t)),
                Err(e) => {
                    tracing::warn!(backend, value, error = %e, "cold request failed");
                    out.dropped += 1;
                }
            }
            driver.warm(backend).await?;

            let mut next = 1;
            while next <= spec.repetitions {
                let wave = spec.concurrency.max(1).min(spec.repetitions + 1 - next);
                let mut set = JoinSet::new();
                for rep in next..next + wave {
                    let driver = driver.clone();
                    let body = body.clone();
                    set.spawn(async move { (rep, driver.price(&body).await) });
                }
                let mut wave_records = Vec::with_capacity(wave);
                while let Some(joined) = set.join_next().await {
                    match joined {
                        Ok((rep, Ok(t))) => wave_records.push(record(rep, t)),
                        Ok((rep, Err(e))) => {
                            tracing::warn!(backend, value, rep, error = %e, "hot request failed");
                            out.dropped += 1;
                        }
                        Err(_) => out.dropped += 1,
                    }
                }
                wave_records.sort_by_key(|r| r.repetition);
                out.records.extend(wave_records);
                next += wave;
            }
        }
    }
    Ok(out)
}
