//! Pricing backends and their cold/hot lifecycle.
//!
//! A worker starts `Uninitialized`. Its first request moves it to `Warming`,
//! runs the backend's warm-up (socket creation and a Ping/Pong for the
//! remote accelerator, nothing for the others), prices the sub-batch, pays
//! the configured cold penalty and ends `Warm`. A worker never goes back to
//! `Uninitialized`; a restart replaces it with a new worker.
//!
//! The cold penalty is `cold_penalty + (cold_factor - 1) * t`, where `t` is
//! the wall time of the cold request itself, so a profile can be pinned
//! either to an absolute start-up cost or to a cold/hot ratio.

use std::net::{SocketAddr, ToSocketAddrs};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::request::{OptionResult, OptionStatus, SubRequest};
use crate::pricing::{price_mc, SimParams};
use crate::wire::{AccelClient, ClientConfig, ClientError, LaneStatus, WireOption, DEFAULT_LANES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BackendKind {
    LocalCpu,
    RemoteAccel,
    Modeled,
}

fn one() -> f64 {
    1.0
}

fn default_chunk() -> usize {
    DEFAULT_LANES
}

fn default_lanes() -> usize {
    DEFAULT_LANES
}

fn default_timeout_ms() -> u64 {
    2000
}

/// Latency and lifecycle model of one backend class. Times are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendProfile {
    pub kind: BackendKind,
    #[serde(default)]
    pub cold_penalty: f64,
    #[serde(default = "one")]
    pub cold_factor: f64,
    #[serde(default)]
    pub per_path_cost: f64,
    #[serde(default)]
    pub per_request_overhead: f64,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Lane count of the remote node; bounds `chunk_size`.
    #[serde(default = "default_lanes")]
    pub lanes: usize,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BackendProfile {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            cold_penalty: 0.0,
            cold_factor: 1.0,
            per_path_cost: 0.0,
            per_request_overhead: 0.0,
            chunk_size: DEFAULT_LANES,
            endpoint: None,
            lanes: DEFAULT_LANES,
            timeout_ms: default_timeout_ms(),
            note: None,
        }
    }

    pub fn local_cpu() -> Self {
        Self::new(BackendKind::LocalCpu)
    }

    pub fn modeled(per_request_overhead: f64, per_path_cost: f64) -> Self {
        Self {
            per_request_overhead,
            per_path_cost,
            ..Self::new(BackendKind::Modeled)
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: Some(endpoint.into()),
            ..Self::new(BackendKind::RemoteAccel)
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be a finite value >= 0, got {v}"))
            }
        };
        nonneg("cold_penalty", self.cold_penalty)?;
        nonneg("per_path_cost", self.per_path_cost)?;
        nonneg("per_request_overhead", self.per_request_overhead)?;
        if !(self.cold_factor.is_finite() && self.cold_factor >= 1.0) {
            return Err(format!("cold_factor must be >= 1, got {}", self.cold_factor));
        }
        if self.chunk_size == 0 {
            return Err("chunk_size must be >= 1".into());
        }
        if self.kind == BackendKind::RemoteAccel {
            if self.endpoint.is_none() {
                return Err("RemoteAccel requires an endpoint".into());
            }
            if self.chunk_size > self.lanes {
                return Err(format!(
                    "chunk_size {} exceeds node lane count {}",
                    self.chunk_size, self.lanes
                ));
            }
            if self.timeout_ms == 0 {
                return Err("timeout_ms must be >= 1".into());
            }
        }
        Ok(())
    }

    /// Extra delay paid by a cold request whose own wall time was `elapsed`.
    pub fn cold_extra(&self, elapsed: Duration) -> Duration {
        let secs = self.cold_penalty + (self.cold_factor - 1.0) * elapsed.as_secs_f64();
        Duration::from_secs_f64(secs.max(0.0))
    }

    pub fn build(&self) -> Box<dyn Backend> {
        match self.kind {
            BackendKind::LocalCpu => Box::new(LocalCpu),
            BackendKind::Modeled => Box::new(Modeled {
                per_request_overhead: self.per_request_overhead,
                per_path_cost: self.per_path_cost,
            }),
            BackendKind::RemoteAccel => Box::new(RemoteAccel::new(
                self.endpoint.clone().unwrap_or_default(),
                ClientConfig {
                    timeout: Duration::from_millis(self.timeout_ms),
                    retransmits: 1,
                    max_options: self.lanes,
                },
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lifecycle {
    Uninitialized,
    Warming,
    Warm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendState {
    pub lifecycle: Lifecycle,
    pub served: u64,
}

impl Default for BackendState {
    fn default() -> Self {
        Self {
            lifecycle: Lifecycle::Uninitialized,
            served: 0,
        }
    }
}

impl BackendState {
    /// Moves forward only; a request to move backwards is ignored.
    pub fn advance(&mut self, to: Lifecycle) {
        let rank = |l: Lifecycle| l as u8;
        if rank(to) > rank(self.lifecycle) {
            self.lifecycle = to;
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("accelerator: {0}")]
    Accel(#[from] ClientError),
    #[error("cannot resolve endpoint {0:?}")]
    Resolve(String),
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("worker task failed: {0}")]
    Task(String),
}

/// One pricing implementation behind a worker.
#[async_trait]
pub trait Backend: Send {
    /// Work done once, on the first request of a fresh worker.
    async fn warm_up(&mut self) -> Result<(), BackendError> {
        Ok(())
    }

    async fn price(&mut self, sub: &SubRequest) -> Result<Vec<OptionResult>, BackendError>;
}

fn price_locally(sub: &SubRequest) -> Vec<OptionResult> {
    sub.options
        .iter()
        .enumerate()
        .map(|(i, spec)| match price_mc(spec, &SimParams::new(sub.paths, sub.seed(i))) {
            Ok(est) => OptionResult {
                price: est.price,
                std_error: est.std_error,
                status: OptionStatus::Ok,
            },
            Err(_) => OptionResult::failed(OptionStatus::InvalidOption),
        })
        .collect()
}

async fn price_blocking(sub: &SubRequest) -> Result<Vec<OptionResult>, BackendError> {
    let sub = sub.clone();
    tokio::task::spawn_blocking(move || price_locally(&sub))
        .await
        .map_err(|e| BackendError::Task(e.to_string()))
}

/// In-process pricing on the worker's own thread.
#[derive(Debug, Default)]
pub struct LocalCpu;

#[async_trait]
impl Backend for LocalCpu {
    async fn price(&mut self, sub: &SubRequest) -> Result<Vec<OptionResult>, BackendError> {
        price_blocking(sub).await
    }
}

/// Stand-in for an attached accelerator stack: a fixed per-request overhead
/// plus a per-path cost, then the actual pricing in-process.
#[derive(Debug)]
pub struct Modeled {
    pub per_request_overhead: f64,
    pub per_path_cost: f64,
}

#[async_trait]
impl Backend for Modeled {
    async fn price(&mut self, sub: &SubRequest) -> Result<Vec<OptionResult>, BackendError> {
        let work = sub.paths as f64 * sub.len() as f64;
        let delay = self.per_request_overhead + work * self.per_path_cost;
        tokio::time::sleep(Duration::from_secs_f64(delay)).await;
        price_blocking(sub).await
    }
}

/// Client of a remote accelerator node; one frame per sub-batch.
#[derive(Debug)]
pub struct RemoteAccel {
    endpoint: String,
    config: ClientConfig,
    client: Option<AccelClient>,
}

impl RemoteAccel {
    pub fn new(endpoint: String, config: ClientConfig) -> Self {
        Self {
            endpoint,
            config,
            client: None,
        }
    }

    pub fn client(&self) -> Option<&AccelClient> {
        self.client.as_ref()
    }

    fn resolve(&self) -> Result<SocketAddr, BackendError> {
        self.endpoint
            .to_socket_addrs()
            .ok()
            .and_then(|mut a| a.next())
            .ok_or_else(|| BackendError::Resolve(self.endpoint.clone()))
    }
}

#[async_trait]
impl Backend for RemoteAccel {
    async fn warm_up(&mut self) -> Result<(), BackendError> {
        let addr = self.resolve()?;
        let mut client = AccelClient::connect(addr, self.config)
            .await
            .map_err(ClientError::from)?;
        client.ping().await?;
        self.client = Some(client);
        Ok(())
    }

    async fn price(&mut self, sub: &SubRequest) -> Result<Vec<OptionResult>, BackendError> {
        if self.client.is_none() {
            self.warm_up().await?;
        }
        let client = self.client.as_mut().expect("client after warm-up");
        let Ok(paths) = u32::try_from(sub.paths) else {
            return Ok(vec![OptionResult::failed(OptionStatus::InvalidOption); sub.len()]);
        };
        let options: Vec<WireOption> = sub
            .options
            .iter()
            .enumerate()
            .map(|(i, spec)| WireOption::new(spec, paths, sub.seed(i)))
            .collect();
        let results = client.price(&options).await?;
        Ok(results
            .into_iter()
            .map(|r| OptionResult {
                price: r.price,
                std_error: r.std_error,
                status: match r.status {
                    LaneStatus::Ok => OptionStatus::Ok,
                    LaneStatus::InvalidOption => OptionStatus::InvalidOption,
                    LaneStatus::LaneError => OptionStatus::LaneError,
                },
            })
            .collect())
    }
}

/// A backend plus its lifecycle. Exclusive access is provided by the pool.
pub struct WorkerSlot {
    backend: Box<dyn Backend>,
    profile: BackendProfile,
    state: BackendState,
}

/// Result of one sub-batch on one worker.
#[derive(Debug, Clone)]
pub struct Served {
    pub results: Vec<OptionResult>,
    pub processing: Duration,
    pub cold: bool,
}

impl WorkerSlot {
    pub fn new(backend: Box<dyn Backend>, profile: BackendProfile) -> Self {
        Self {
            backend,
            profile,
            state: BackendState::default(),
        }
    }

    pub fn state(&self) -> BackendState {
        self.state
    }

    /// Runs the warm-up if the worker is not yet warm, without serving a
    /// request. The configured absolute cold penalty is still paid.
    pub async fn warm(&mut self) -> Result<(), BackendError> {
        if self.state.lifecycle == Lifecycle::Warm {
            return Ok(());
        }
        self.state.advance(Lifecycle::Warming);
        let start = Instant::now();
        self.backend.warm_up().await?;
        tokio::time::sleep(self.profile.cold_extra(start.elapsed())).await;
        self.state.advance(Lifecycle::Warm);
        Ok(())
    }

    pub async fn serve(&mut self, sub: &SubRequest) -> Result<Served, BackendError> {
        let start = Instant::now();
        let cold = self.state.lifecycle != Lifecycle::Warm;
        if cold {
            self.state.advance(Lifecycle::Warming);
            self.backend.warm_up().await?;
        }
        let results = self.backend.price(sub).await?;
        if cold {
            tokio::time::sleep(self.profile.cold_extra(start.elapsed())).await;
            self.state.advance(Lifecycle::Warm);
        }
        self.state.served += 1;
        Ok(Served {
            results,
            processing: start.elapsed(),
            cold,
        })
    }
}
