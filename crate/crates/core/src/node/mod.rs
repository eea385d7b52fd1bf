//! Simulated network-attached pricing accelerator.
//!
//! The node owns one UDP socket for its whole lifetime and answers
//! PriceRequest and Ping frames. Each option of a request occupies one lane;
//! the lanes of a frame run concurrently and the reply is ordered like the
//! request. Under [`Pacing::Modeled`] the reply is held back until
//! `frame_latency + max(paths) / per_lane_rate` after the datagram arrived,
//! which gives the node a service time that depends only on its slowest lane.

use std::future::Future;
use std::net::SocketAddr;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::net::UdpSocket;
use tokio::sync::Semaphore;

use crate::pricing::price_mc;
use crate::wire::{
    decode_header, AccelFrame, Codec, ErrorCode, LaneStatus, Payload, ProtocolError, WireOption,
    WireResult, DEFAULT_LANES, MAX_DATAGRAM, MAX_DETAIL_LEN, MAX_OPTIONS_PER_FRAME,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Pacing {
    /// Reply as soon as the lanes finish.
    Native,
    /// Hold the reply until the modeled service time has elapsed.
    Modeled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeConfig {
    pub bind: SocketAddr,
    pub lane_count: usize,
    /// Paths per second per lane; 0 disables the model.
    pub per_lane_rate: f64,
    pub pacing: Pacing,
    /// Fixed per-frame latency added under modeled pacing.
    #[serde(default)]
    pub frame_latency: Duration,
    pub max_inflight: usize,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 7700)),
            lane_count: DEFAULT_LANES,
            per_lane_rate: 0.0,
            pacing: Pacing::Native,
            frame_latency: Duration::ZERO,
            max_inflight: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum NodeError {
    #[error("invalid node config: {0}")]
    Config(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("socket error: {0}")]
    Io(#[from] std::io::Error),
}

impl NodeConfig {
    pub fn validate(&self) -> Result<(), NodeError> {
        if self.lane_count == 0 || self.lane_count > MAX_OPTIONS_PER_FRAME {
            return Err(NodeError::Config(format!(
                "lane_count must be in [1, {MAX_OPTIONS_PER_FRAME}], got {}",
                self.lane_count
            )));
        }
        if !(self.per_lane_rate.is_finite() && self.per_lane_rate >= 0.0) {
            return Err(NodeError::Config(format!(
                "per_lane_rate must be >= 0, got {}",
                self.per_lane_rate
            )));
        }
        if self.pacing == Pacing::Modeled && self.per_lane_rate <= 0.0 {
            return Err(NodeError::Config(
                "modeled pacing requires per_lane_rate > 0".into(),
            ));
        }
        if self.max_inflight == 0 {
            return Err(NodeError::Config("max_inflight must be >= 1".into()));
        }
        Ok(())
    }

    /// Modeled service time of a frame, or `None` under native pacing.
    pub fn service_target(&self, options: &[WireOption]) -> Option<Duration> {
        if self.pacing != Pacing::Modeled || self.per_lane_rate <= 0.0 {
            return None;
        }
        let slowest = options.iter().map(|o| o.paths).max().unwrap_or(0);
        Some(self.frame_latency + Duration::from_secs_f64(f64::from(slowest) / self.per_lane_rate))
    }
}

/// Counter snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LaneStats {
    pub frames_served: u64,
    pub options_served: u64,
    pub errors: u64,
    pub busy_time: f64,
}

#[derive(Debug, Default)]
struct Counters {
    frames: AtomicU64,
    options: AtomicU64,
    errors: AtomicU64,
    busy_ns: AtomicU64,
}

impl Counters {
    fn snapshot(&self) -> LaneStats {
        LaneStats {
            frames_served: self.frames.load(Ordering::Relaxed),
            options_served: self.options.load(Ordering::Relaxed),
            errors: self.errors.load(Ordering::Relaxed),
            busy_time: self.busy_ns.load(Ordering::Relaxed) as f64 * 1e-9,
        }
    }
}

fn price_lane(option: &WireOption) -> WireResult {
    let spec = option.spec();
    let sim = option.sim();
    if spec.validate().is_err() || sim.validate().is_err() {
        return WireResult::failed(LaneStatus::InvalidOption);
    }
    match catch_unwind(AssertUnwindSafe(|| price_mc(&spec, &sim))) {
        Ok(Ok(est)) => WireResult {
            price: est.price,
            std_error: est.std_error,
            status: LaneStatus::Ok,
        },
        Ok(Err(_)) => WireResult::failed(LaneStatus::InvalidOption),
        Err(_) => WireResult::failed(LaneStatus::LaneError),
    }
}

/// Prices each option on its own lane and returns results in request order.
pub fn process_frame(options: &[WireOption]) -> Vec<WireResult> {
    if options.len() <= 1 {
        return options.iter().map(price_lane).collect();
    }
    std::thread::scope(|s| {
        let lanes: Vec<_> = options
            .iter()
            .map(|o| s.spawn(move || price_lane(o)))
            .collect();
        lanes
            .into_iter()
            .map(|h| h.join().unwrap_or(WireResult::failed(LaneStatus::LaneError)))
            .collect()
    })
}

fn error_frame(request_id: u64, code: ErrorCode, detail: impl Into<String>) -> AccelFrame {
    let mut detail = detail.into();
    if detail.len() > MAX_DETAIL_LEN {
        let mut cut = MAX_DETAIL_LEN;
        while !detail.is_char_boundary(cut) {
            cut -= 1;
        }
        detail.truncate(cut);
    }
    AccelFrame::new(request_id, Payload::Error { code, detail })
}

/// What the node does with one inbound datagram.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Drop,
    Reply(AccelFrame),
    Price {
        request_id: u64,
        options: Vec<WireOption>,
    },
}

/// Classifies a datagram without doing any pricing work.
pub fn triage(bytes: &[u8], config: &NodeConfig) -> Action {
    let request_id = match decode_header(bytes) {
        Ok((_, id)) => id,
        Err(_) => return Action::Drop,
    };
    let frame = match Codec::permissive().decode(bytes) {
        Ok(f) => f,
        Err(e) => {
            let code = ErrorCode::from(&e);
            return Action::Reply(error_frame(request_id, code, e.to_string()));
        }
    };
    match frame.payload {
        Payload::Ping => Action::Reply(AccelFrame::new(request_id, Payload::Pong)),
        Payload::PriceRequest(options) if options.len() > config.lane_count => {
            let e = ProtocolError::FrameTooLarge {
                count: options.len(),
                limit: config.lane_count,
            };
            Action::Reply(error_frame(request_id, ErrorCode::FrameTooLarge, e.to_string()))
        }
        Payload::PriceRequest(options) => Action::Price {
            request_id,
            options,
        },
        other => {
            let kind = AccelFrame::new(request_id, other).msg_type();
            Action::Reply(error_frame(
                request_id,
                ErrorCode::BadType,
                format!("node does not accept {kind:?}"),
            ))
        }
    }
}

/// A bound accelerator node.
pub struct AccelNode {
    socket: Arc<UdpSocket>,
    config: Arc<NodeConfig>,
    counters: Arc<Counters>,
}

impl AccelNode {
    pub async fn bind(config: NodeConfig) -> Result<Self, NodeError> {
        config.validate()?;
        let socket = UdpSocket::bind(config.bind)
            .await
            .map_err(|source| NodeError::Bind {
                addr: config.bind,
                source,
            })?;
        Ok(Self {
            socket: Arc::new(socket),
            config: Arc::new(config),
            counters: Arc::default(),
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn stats(&self) -> LaneStats {
        self.counters.snapshot()
    }

    /// Serves until `shutdown` resolves; returns the final counters.
    pub async fn run(self, shutdown: impl Future<Output = ()>) -> Result<LaneStats, NodeError> {
        let inflight = Arc::new(Semaphore::new(self.config.max_inflight));
        let mut buf = vec![0u8; MAX_DATAGRAM + 1];
        tokio::pin!(shutdown);
        loop {
            let (n, peer) = tokio::select! {
                _ = &mut shutdown => break,
                r = self.socket.recv_from(&mut buf) => match r {
                    Ok(x) => x,
                    // ICMP errors from earlier sends surface here on some platforms.
                    Err(e) => {
                        tracing::debug!(error = %e, "recv_from failed");
                        continue;
                    }
                },
            };
            let received = Instant::now();
            match triage(&buf[..n], &self.config) {
                Action::Drop => {
                    self.counters.errors.fetch_add(1, Ordering::Relaxed);
                }
                Action::Reply(frame) => {
                    if matches!(frame.payload, Payload::Error { .. }) {
                        self.counters.errors.fetch_add(1, Ordering::Relaxed);
                    }
                    send(&self.socket, &frame, peer).await;
                }
                Action::Price {
                    request_id,
                    options,
                } => {
                    let permit = inflight
                        .clone()
                        .acquire_owned()
                        .await
                        .expect("semaphore never closed");
                    let socket = self.socket.clone();
                    let config = self.config.clone();
                    let counters = self.counters.clone();
                    tokio::spawn(async move {
                        serve_price(&socket, &config, &counters, request_id, options, peer, received)
                            .await;
                        drop(permit);
                    });
                }
            }
        }
        Ok(self.counters.snapshot())
    }
}

async fn serve_price(
    socket: &UdpSocket,
    config: &NodeConfig,
    counters: &Counters,
    request_id: u64,
    options: Vec<WireOption>,
    peer: SocketAddr,
    received: Instant,
) {
    let target = config.service_target(&options);
    let count = options.len();
    let results = match tokio::task::spawn_blocking(move || process_frame(&options)).await {
        Ok(r) => r,
        Err(_) => vec![WireResult::failed(LaneStatus::LaneError); count],
    };
    if let Some(target) = target {
        tokio::time::sleep_until((received + target).into()).await;
    }
    let failed = results.iter().filter(|r| r.status != LaneStatus::Ok).count() as u64;
    let frame = AccelFrame::new(request_id, Payload::PriceResponse(results));
    send(socket, &frame, peer).await;

    let elapsed = received.elapsed();
    counters.frames.fetch_add(1, Ordering::Relaxed);
    counters.options.fetch_add(count as u64, Ordering::Relaxed);
    counters.errors.fetch_add(failed, Ordering::Relaxed);
    counters
        .busy_ns
        .fetch_add(elapsed.as_nanos() as u64, Ordering::Relaxed);
    tracing::info!(
        request_id,
        options = count,
        service_time_us = elapsed.as_micros() as u64,
        "frame"
    );
}

async fn send(socket: &UdpSocket, frame: &AccelFrame, peer: SocketAddr) {
    let bytes = match Codec::permissive().encode(frame) {
        Ok(b) => b,
        Err(e) => {
            tracing::error!(error = %e, "cannot encode reply");
            return;
        }
    };
    if let Err(e) = socket.send_to(&bytes, peer).await {
        tracing::warn!(error = %e, %peer, "send_to failed");
    }
}

/// Binds and serves until `shutdown` resolves.
pub async fn serve(
    config: NodeConfig,
    shutdown: impl Future<Output = ()>,
) -> Result<LaneStats, NodeError> {
    AccelNode::bind(config).await?.run(shutdown).await
}
