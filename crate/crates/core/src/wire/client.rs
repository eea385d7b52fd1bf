//! Request/response clients for the accelerator node.
//!
//! Each exchange sends one frame under a fresh request id and waits for the
//! reply carrying that id. Replies for any other id (late or duplicated
//! datagrams) are discarded. On timeout the frame is retransmitted under a
//! new id; the old id is retired, so a late reply to it is discarded too.

use std::io;
use std::net::SocketAddr;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::frame::{
    decode_header, AccelFrame, Codec, ErrorCode, Payload, ProtocolError, WireOption, WireResult,
    MAX_DATAGRAM,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("protocol error: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("no reply after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("node reported {code:?}: {detail}")]
    Remote { code: ErrorCode, detail: String },
    #[error("unexpected reply: {0}")]
    Unexpected(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct ClientConfig {
    pub timeout: Duration,
    /// Extra sends after the first one times out.
    pub retransmits: u32,
    pub max_options: usize,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(2),
            retransmits: 1,
            max_options: super::DEFAULT_LANES,
        }
    }
}

/// Datagram counters for one client.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClientStats {
    pub sent: u64,
    pub received: u64,
    pub discarded: u64,
}

enum Incoming {
    Reply(AccelFrame),
    Stale,
    Broken(ProtocolError),
}

fn classify(codec: &Codec, bytes: &[u8], expected: u64) -> Incoming {
    match decode_header(bytes) {
        Ok((_, id)) if id != expected => return Incoming::Stale,
        Err(_) => return Incoming::Stale,
        Ok(_) => {}
    }
    match codec.decode(bytes) {
        Ok(frame) => Incoming::Reply(frame),
        Err(e) => Incoming::Broken(e),
    }
}

fn unspecified_for(endpoint: &SocketAddr) -> SocketAddr {
    if endpoint.is_ipv4() {
        SocketAddr::from(([0, 0, 0, 0], 0))
    } else {
        SocketAddr::from(([0u16; 8], 0))
    }
}

fn into_results(frame: AccelFrame, expected: usize) -> Result<Vec<WireResult>, ClientError> {
    match frame.payload {
        Payload::PriceResponse(results) if results.len() == expected => Ok(results),
        Payload::PriceResponse(_) => Err(ClientError::Unexpected("result count mismatch")),
        Payload::Error { code, detail } => Err(ClientError::Remote { code, detail }),
        _ => Err(ClientError::Unexpected("expected PriceResponse")),
    }
}

fn into_pong(frame: AccelFrame) -> Result<(), ClientError> {
    match frame.payload {
        Payload::Pong => Ok(()),
        Payload::Error { code, detail } => Err(ClientError::Remote { code, detail }),
        _ => Err(ClientError::Unexpected("expected Pong")),
    }
}

/// Async client over a connected tokio UDP socket.
#[derive(Debug)]
pub struct AccelClient {
    socket: tokio::net::UdpSocket,
    codec: Codec,
    config: ClientConfig,
    next_id: u64,
    stats: ClientStats,
}

impl AccelClient {
    pub async fn connect(endpoint: SocketAddr, config: ClientConfig) -> io::Result<Self> {
        let socket = tokio::net::UdpSocket::bind(unspecified_for(&endpoint)).await?;
        socket.connect(endpoint).await?;
        Ok(Self {
            socket,
            codec: Codec::new(config.max_options),
            config,
            next_id: 1,
            stats: ClientStats::default(),
        })
    }

    pub fn stats(&self) -> ClientStats {
        self.stats
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    pub async fn ping(&mut self) -> Result<(), ClientError> {
        into_pong(self.exchange(Payload::Ping).await?)
    }

    pub async fn price(&mut self, options: &[WireOption]) -> Result<Vec<WireResult>, ClientError> {
        let frame = self.exchange(Payload::PriceRequest(options.to_vec())).await?;
        into_results(frame, options.len())
    }

    async fn exchange(&mut self, payload: Payload) -> Result<AccelFrame, ClientError> {
        let attempts = self.config.retransmits + 1;
        let mut buf = vec![0u8; MAX_DATAGRAM + 1];
        for _ in 0..attempts {
            let id = self.next_id;
            self.next_id = self.next_id.wrapping_add(1);
            let bytes = self.codec.encode(&AccelFrame::new(id, payload.clone()))?;
            self.socket.send(&bytes).await?;
            self.stats.sent += 1;

            let deadline = tokio::time::Instant::now() + self.config.timeout;
            loop {
                let n = match tokio::time::timeout_at(deadline, self.socket.recv(&mut buf)).await {
                    Err(_) => break,
                    Ok(r) => r?,
                };
                self.stats.received += 1;
                match classify(&self.codec, &buf[..n], id) {
                    Incoming::Reply(frame) => return Ok(frame),
                    Incoming::Stale => self.stats.discarded += 1,
                    Incoming::Broken(e) => return Err(e.into()),
                }
            }
        }
        Err(ClientError::Timeout { attempts })
    }
}

/// Blocking client over a connected std UDP socket.
#[derive(Debug)]
pub struct BlockingAccelClient {
    socket: std::net::UdpSocket,
    codec: Codec,
    config: ClientConfig,
    next_id: u64,
    stats: ClientStats,
}

impl BlockingAccelClient {
    pub fn connect(endpoint: SocketAddr, config: ClientConfig) -> io::Result<Self> {
        let socket = std::net::UdpSocket::bind(unspecified_for(&endpoint))?;
        socket.connect(endpoint)?;
        Ok(Self {
            socket,
            codec: Codec::new(config.max_options),
            config,
            next_id: 1,
            stats: ClientStats::default(),
        })
    }

    pub fn stats(&self) -> ClientStats {
        self.stats
    }

    pub fn ping(&mut self) -> Result<(), ClientError> {
        into_pong(self.exchange(Payload::Ping)?)
    }

    pub fn price(&mut self, options: &[WireOption]) -> Result<Vec<WireResult>, ClientError> {
        let frame = self.exchange(Payload::PriceRequest(options.to_vec()))?;
        into_results(frame, options.len())
    }

    fn exchange(&mut self, payload: Payload) -> Result<AccelFrame, ClientError> {
        let attempts = self.config.retransmits + 1;
        let mut buf = vec![0u8; MAX_DATAGRAM + 1];
        for _ in 0..attempts {
            let id = self.next_id;
            self.next_id = self.next_id.wrapping_add(1);
            let bytes = self.codec.encode(&AccelFrame::new(id, payload.clone()))?;
            self.socket.send(&bytes)?;
            self.stats.sent += 1;

            let deadline = Instant::now() + self.config.timeout;
            loop {
                let left = deadline.saturating_duration_since(Instant::now());
                if left.is_zero() {
                    break;
                }
                self.socket.set_read_timeout(Some(left))?;
                let n = match self.socket.recv(&mut buf) {
                    Ok(n) => n,
                    Err(e)
                        if matches!(
                            e.kind(),
                            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                        ) =>
                    {
                        break
                    }
                    Err(e) => return Err(e.into()),
                };
                self.stats.received += 1;
                match classify(&self.codec, &buf[..n], id) {
                    Incoming::Reply(frame) => return Ok(frame),
                    Incoming::Stale => self.stats.discarded += 1,
                    Incoming::Broken(e) => return Err(e.into()),
                }
            }
        }
        Err(ClientError::Timeout { attempts })
    }
}
