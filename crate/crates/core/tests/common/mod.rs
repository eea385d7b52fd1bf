//! Shared fixtures: in-process node and gateway, and a UDP proxy that can
//! drop or duplicate datagrams.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use mcaas_core::gateway::{http, BackendProfile, Gateway, Pool};
use mcaas_core::node::{AccelNode, NodeConfig, Pacing};
use mcaas_core::pricing::{OptionKind, OptionSpec};
use tokio::net::{TcpListener, UdpSocket};
use tokio::sync::oneshot;

pub struct Running {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
}

impl Running {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for Running {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
    }
}

pub fn loopback() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 0))
}

pub fn native_node() -> NodeConfig {
    NodeConfig {
        bind: loopback(),
        ..NodeConfig::default()
    }
}

pub fn modeled_node(rate: f64, frame_latency: Duration) -> NodeConfig {
    NodeConfig {
        bind: loopback(),
        per_lane_rate: rate,
        pacing: Pacing::Modeled,
        frame_latency,
        max_inflight: 8,
        ..NodeConfig::default()
    }
}

pub async fn start_node(config: NodeConfig) -> Running {
    let node = AccelNode::bind(config).await.expect("bind node");
    let addr = node.local_addr().unwrap();
    let (tx, rx) = oneshot::channel();
    tokio::spawn(node.run(async {
        let _ = rx.await;
    }));
    Running {
        addr,
        stop: Some(tx),
    }
}

pub async fn start_gateway(gateway: Arc<Gateway>) -> Running {
    let listener = TcpListener::bind(loopback()).await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = oneshot::channel();
    tokio::spawn(http::serve(listener, gateway, async {
        let _ = rx.await;
    }));
    Running {
        addr,
        stop: Some(tx),
    }
}

pub fn gateway_of(pools: Vec<(&str, BackendProfile, usize)>) -> Arc<Gateway> {
    let default = pools[0].0.to_owned();
    let map: BTreeMap<String, Arc<Pool>> = pools
        .into_iter()
        .map(|(name, profile, n)| (name.to_owned(), Arc::new(Pool::new(name, profile, n))))
        .collect();
    Arc::new(Gateway::with_pools(map, default))
}

pub fn remote_profile(endpoint: SocketAddr, timeout_ms: u64) -> BackendProfile {
    BackendProfile {
        timeout_ms,
        ..BackendProfile::remote(endpoint.to_string())
    }
}

/// Deterministic batch of valid options with varied parameters.
pub fn batch(n: usize, salt: u64) -> Vec<OptionSpec> {
    (0..n)
        .map(|i| {
            let k = i as u64 + salt;
            OptionSpec {
                spot: 80.0 + (k % 41) as f64,
                strike: 90.0 + (k % 23) as f64,
                rate: 0.01 * (k % 6) as f64,
                volatility: 0.1 + 0.05 * (k % 7) as f64,
                expiry: 0.25 + 0.25 * (k % 8) as f64,
                kind: if k.is_multiple_of(3) { OptionKind::Put } else { OptionKind::Call },
            }
        })
        .collect()
}

pub fn batch_json(options: &[OptionSpec], paths: u64, seed_base: u64, backend: &str) -> serde_json::Value {
    let options: Vec<_> = options
        .iter()
        .map(|o| {
            serde_json::json!({
                "spot": o.spot, "strike": o.strike, "rate": o.rate,
                "vol": o.volatility, "expiry": o.expiry,
                "kind": match o.kind { OptionKind::Call => "call", OptionKind::Put => "put" },
            })
        })
        .collect();
    serde_json::json!({ "options": options, "paths": paths, "seed_base": seed_base, "backend": backend })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Faults {
    /// Send every datagram twice, in both directions.
    pub duplicate: bool,
    /// Drop the k-th, 2k-th, ... request datagram of each client.
    pub drop_every: Option<u64>,
}

#[derive(Debug, Default)]
pub struct ProxyStats {
    pub requests_in: AtomicU64,
    pub forwarded: AtomicU64,
    pub replies: AtomicU64,
    pub dropped: AtomicU64,
}

impl ProxyStats {
    pub fn get(&self) -> (u64, u64, u64, u64) {
        (
            self.requests_in.load(Ordering::SeqCst),
            self.forwarded.load(Ordering::SeqCst),
            self.replies.load(Ordering::SeqCst),
            self.dropped.load(Ordering::SeqCst),
        )
    }
}

/// UDP proxy between gateway workers and a node. Each client gets its own
/// upstream socket so replies find their way back.
pub struct FaultProxy {
    pub addr: SocketAddr,
    pub stats: Arc<ProxyStats>,
    task: tokio::task::JoinHandle<()>,
}

impl Drop for FaultProxy {
    fn drop(&mut self) {
        self.task.abort();
    }
}

impl FaultProxy {
    pub async fn start(node: SocketAddr, faults: Faults) -> FaultProxy {
        let front = Arc::new(UdpSocket::bind(loopback()).await.unwrap());
        let addr = front.local_addr().unwrap();
        let stats = Arc::new(ProxyStats::default());
        let s = stats.clone();
        let task = tokio::spawn(async move {
            let mut clients: HashMap<SocketAddr, (Arc<UdpSocket>, u64, tokio::task::JoinHandle<()>)> =
                HashMap::new();
            let mut buf = vec![0u8; 2048];
            loop {
                let Ok((n, client)) = front.recv_from(&mut buf).await else {
                    continue;
                };
                s.requests_in.fetch_add(1, Ordering::SeqCst);
                if let std::collections::hash_map::Entry::Vacant(e) = clients.entry(client) {
                    let up = Arc::new(UdpSocket::bind(loopback()).await.unwrap());
                    up.connect(node).await.unwrap();
                    let (up2, front2, s2) = (up.clone(), front.clone(), s.clone());
                    let back = tokio::spawn(async move {
                        let mut buf = vec![0u8; 2048];
                        while let Ok(n) = up2.recv(&mut buf).await {
                            let copies = if faults.duplicate { 2 } else { 1 };
                            for _ in 0..copies {
                                let _ = front2.send_to(&buf[..n], client).await;
                                s2.replies.fetch_add(1, Ordering::SeqCst);
                            }
                        }
                    });
                    e.insert((up, 0, back));
                }
                let entry = clients.get_mut(&client).unwrap();
                entry.1 += 1;
                if faults.drop_every.is_some_and(|k| entry.1.is_multiple_of(k)) {
                    s.dropped.fetch_add(1, Ordering::SeqCst);
                    continue;
                }
                let copies = if faults.duplicate { 2 } else { 1 };
                for _ in 0..copies {
                    let _ = entry.0.send(&buf[..n]).await;
                    s.forwarded.fetch_add(1, Ordering::SeqCst);
                }
            }
        });
        FaultProxy { addr, stats, task }
    }
}
