use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use super::backend::Lifecycle;
use super::config::GatewayConfig;
use super::metrics::{MetricsSink, RequestRecord};
use super::pool::Pool;
use super::request::{split, OptionStatus, PriceResult, PricingRequest, Timing};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ServiceError {
    #[error("invalid {field}: {reason}")]
    BadRequest { field: String, reason: String },
    #[error("no backend can serve the request: {0}")]
    Unavailable(String),
}

impl ServiceError {
    pub fn bad(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ServiceError::BadRequest {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoolHealth {
    pub name: String,
    pub kind: String,
    pub workers: usize,
    pub warm: usize,
    pub uninitialized: usize,
}

/// Splitter, balancer and worker pools for every configured backend.
pub struct Gateway {
    pools: BTreeMap<String, Arc<Pool>>,
    default_backend: String,
    metrics: MetricsSink,
}

impl Gateway {
    pub fn from_config(cfg: &GatewayConfig) -> Self {
        let pools = cfg
            .backends
            .iter()
            .map(|b| {
                let pool = Pool::new(b.name.clone(), b.profile.clone(), b.workers)
                    .with_retry(cfg.balancer.retry);
                (b.name.clone(), Arc::new(pool))
            })
            .collect();
        Self::with_pools(pools, cfg.default_backend.clone())
    }

    pub fn with_pools(pools: BTreeMap<String, Arc<Pool>>, default_backend: String) -> Self {
        Self {
            pools,
            default_backend,
            metrics: MetricsSink::default(),
        }
    }

    pub fn pool(&self, name: Option<&str>) -> Result<&Arc<Pool>, ServiceError> {
        let name = name.unwrap_or(&self.default_backend);
        self.pools
            .get(name)
            .ok_or_else(|| ServiceError::bad("backend", format!("unknown backend {name:?}")))
    }

    pub fn metrics(&self) -> &MetricsSink {
        &self.metrics
    }

    pub fn backend_names(&self) -> Vec<String> {
        self.pools.keys().cloned().collect()
    }

    pub async fn health(&self) -> Vec<PoolHealth> {
        let mut out = Vec::new();
        for (name, pool) in &self.pools {
            let workers = pool.workers();
            let mut warm = 0;
            let mut uninitialized = 0;
            for w in workers.iter() {
                match w.state().await.lifecycle {
                    Lifecycle::Warm => warm += 1,
                    Lifecycle::Uninitialized => uninitialized += 1,
                    Lifecycle::Warming => {}
                }
            }
            out.push(PoolHealth {
                name: name.clone(),
                kind: format!("{:?}", pool.profile().kind),
                workers: workers.len(),
                warm,
                uninitialized,
            });
        }
        out
    }

    /// Splits, dispatches and merges one pricing request. `received` is the
    /// instant the request arrived; end-to-end time is measured from it.
    pub async fn handle_price(
        &self,
        backend: Option<&str>,
        request: PricingRequest,
        received: Instant,
    ) -> Result<PriceResult, ServiceError> {
        request
            .validate()
            .map_err(|(field, reason)| ServiceError::bad(field, reason))?;
        let pool = self.pool(backend)?;
        let subs = split(&request, pool.chunk_size());
        let sub_batches = subs.len();
        let dispatched = pool.dispatch(subs).await;

        let failed = dispatched
            .results
            .iter()
            .filter(|r| r.status == OptionStatus::BackendError)
            .count();
        if failed == dispatched.results.len() {
            return Err(ServiceError::Unavailable(format!(
                "all {} workers of {:?} failed",
                pool.workers().len(),
                pool.name()
            )));
        }

        let processing_s: f64 = dispatched.subs.iter().map(|s| s.processing.as_secs_f64()).sum();
        let cold = dispatched.subs.iter().any(|s| s.cold);
        let e2e_s = received.elapsed().as_secs_f64();
        self.metrics.record(RequestRecord {
            backend: pool.name().to_owned(),
            options: request.options.len(),
            paths: request.paths,
            sub_batches,
            processing_s,
            e2e_s,
            cold,
            failed_options: dispatched
                .results
                .iter()
                .filter(|r| r.status != OptionStatus::Ok)
                .count(),
        });
        Ok(PriceResult {
            results: dispatched.results,
            timing: Timing {
                processing_s,
                e2e_s,
            },
            backend: pool.name().to_owned(),
            cold,
        })
    }
}
