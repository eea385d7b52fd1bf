//! C ABI over `mcaas-core`.
//!
//! Every fallible function returns a [`McaasStatus`]. On failure a message is
//! kept per thread and can be read with [`mcaas_last_error_message`].
//! Handles ([`McaasAccelClient`], [`McaasNode`]) are opaque and must be
//! released with their `_free` / `_stop` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::net::{SocketAddr, ToSocketAddrs};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::mpsc;
use std::thread::JoinHandle;
use std::time::Duration;

use mcaas_core::node::{AccelNode, NodeConfig, Pacing};
use mcaas_core::pricing::{price_bs, price_mc, OptionKind, OptionSpec, SimParams};
use mcaas_core::wire::{
    AccelFrame, BlockingAccelClient, ClientConfig, ClientError, Codec, LaneStatus, Payload,
    WireOption, WireResult, MAX_OPTIONS_PER_FRAME,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McaasStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ProtocolError = 3,
    IoError = 4,
    Timeout = 5,
    RemoteError = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Option contract. `kind`: 0 = call, 1 = put.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McaasOption {
    pub spot: f64,
    pub strike: f64,
    pub rate: f64,
    pub volatility: f64,
    pub expiry: f64,
    pub kind: u8,
}

/// Option plus its simulation controls, as sent to the accelerator.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McaasWireOption {
    pub option: McaasOption,
    pub paths: u32,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct McaasEstimate {
    pub price: f64,
    pub std_error: f64,
    pub paths_used: u64,
}

/// Per-option accelerator result. `status`: 0 ok, 1 invalid option, 2 lane error.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct McaasLaneResult {
    pub price: f64,
    pub std_error: f64,
    pub status: u8,
}

/// Blocking UDP client for an accelerator node.
pub struct McaasAccelClient {
    inner: BlockingAccelClient,
}

/// Accelerator node running on a background thread.
pub struct McaasNode {
    addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: McaasStatus, msg: impl Into<String>) -> McaasStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> McaasStatus) -> McaasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(McaasStatus::Panic, "panic inside mcaas"),
    }
}

fn to_spec(o: &McaasOption) -> Result<OptionSpec, McaasStatus> {
    let kind = match o.kind {
        0 => OptionKind::Call,
        1 => OptionKind::Put,
        k => return Err(fail(McaasStatus::InvalidArgument, format!("kind must be 0 or 1, got {k}"))),
    };
    Ok(OptionSpec {
        spot: o.spot,
        strike: o.strike,
        rate: o.rate,
        volatility: o.volatility,
        expiry: o.expiry,
        kind,
    })
}

fn to_wire(o: &McaasWireOption) -> Result<WireOption, McaasStatus> {
    Ok(WireOption::new(&to_spec(&o.option)?, o.paths, o.seed))
}

fn from_result(r: &WireResult) -> McaasLaneResult {
    McaasLaneResult {
        price: r.price,
        std_error: r.std_error,
        status: r.status as u8,
    }
}

fn client_status(e: &ClientError) -> McaasStatus {
    let status = match e {
        ClientError::Io(_) => McaasStatus::IoError,
        ClientError::Protocol(_) | ClientError::Unexpected(_) => McaasStatus::ProtocolError,
        ClientError::Timeout { .. } => McaasStatus::Timeout,
        ClientError::Remote { .. } => McaasStatus::RemoteError,
    };
    fail(status, e.to_string())
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], McaasStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(McaasStatus::NullPointer, "null array"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `cap - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be NULL or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mcaas_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Monte-Carlo price of one option.
///
/// # Safety
/// `option` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcaas_price_mc(
    option: *const McaasOption,
    paths: u64,
    seed: u64,
    out: *mut McaasEstimate,
) -> McaasStatus {
    guard(|| {
        if option.is_null() || out.is_null() {
            return fail(McaasStatus::NullPointer, "null option or out");
        }
        let spec = match to_spec(&*option) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match price_mc(&spec, &SimParams::new(paths, seed)) {
            Ok(est) => {
                *out = McaasEstimate {
                    price: est.price,
                    std_error: est.std_error,
                    paths_used: est.paths_used,
                };
                McaasStatus::Ok
            }
            Err(e) => fail(McaasStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Black-Scholes closed-form price of one option.
///
/// # Safety
/// `option` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcaas_price_bs(option: *const McaasOption, out: *mut f64) -> McaasStatus {
    guard(|| {
        if option.is_null() || out.is_null() {
            return fail(McaasStatus::NullPointer, "null option or out");
        }
        let spec = match to_spec(&*option) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match price_bs(&spec) {
            Ok(p) => {
                *out = p;
                McaasStatus::Ok
            }
            Err(e) => fail(McaasStatus::InvalidArgument, e.to_string()),
        }
    })
}

unsafe fn write_frame(frame: &AccelFrame, buf: *mut u8, cap: usize, written: *mut usize) -> McaasStatus {
    if buf.is_null() || written.is_null() {
        return fail(McaasStatus::NullPointer, "null buffer or written");
    }
    let bytes = match Codec::permissive().encode(frame) {
        Ok(b) => b,
        Err(e) => return fail(McaasStatus::InvalidArgument, e.to_string()),
    };
    *written = bytes.len();
    if bytes.len() > cap {
        return fail(
            McaasStatus::BufferTooSmall,
            format!("frame needs {} bytes, buffer has {cap}", bytes.len()),
        );
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    McaasStatus::Ok
}

/// Encodes a PriceRequest frame into `buf`. `*written` receives the frame
/// length, also when the buffer is too small.
///
/// # Safety
/// `options` must point to `count` items; `buf` to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mcaas_encode_price_request(
    request_id: u64,
    options: *const McaasWireOption,
    count: usize,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> McaasStatus {
    guard(|| {
        let opts = match slice(options, count) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let wire = match opts.iter().map(to_wire).collect::<Result<Vec<_>, _>>() {
            Ok(w) => w,
            Err(s) => return s,
        };
        write_frame(
            &AccelFrame::new(request_id, Payload::PriceRequest(wire)),
            buf,
            cap,
            written,
        )
    })
}

/// Encodes a Ping frame into `buf`.
///
/// # Safety
/// `buf` must point to `cap` writable bytes; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mcaas_encode_ping(
    request_id: u64,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> McaasStatus {
    guard(|| write_frame(&AccelFrame::new(request_id, Payload::Ping), buf, cap, written))
}

/// Decodes a PriceResponse frame. Writes up to `cap` results to `out` and the
/// result count to `*count`.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` to `cap` writable items;
/// `request_id` and `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mcaas_decode_price_response(
    bytes: *const u8,
    len: usize,
    request_id: *mut u64,
    out: *mut McaasLaneResult,
    cap: usize,
    count: *mut usize,
) -> McaasStatus {
    guard(|| {
        if request_id.is_null() || count.is_null() {
            return fail(McaasStatus::NullPointer, "null request_id or count");
        }
        let data = match slice(bytes, len) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let frame = match Codec::permissive().decode(data) {
            Ok(f) => f,
            Err(e) => return fail(McaasStatus::ProtocolError, e.to_string()),
        };
        *request_id = frame.request_id;
        let results = match frame.payload {
            Payload::PriceResponse(r) => r,
            Payload::Error { code, detail } => {
                return fail(McaasStatus::RemoteError, format!("{code:?}: {detail}"))
            }
            _ => return fail(McaasStatus::ProtocolError, "not a PriceResponse"),
        };
        *count = results.len();
        if results.len() > cap {
            return fail(McaasStatus::BufferTooSmall, "result buffer too small");
        }
        if out.is_null() {
            return fail(McaasStatus::NullPointer, "null out");
        }
        for (i, r) in results.iter().enumerate() {
            *out.add(i) = from_result(r);
        }
        McaasStatus::Ok
    })
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, McaasStatus> {
    if p.is_null() {
        return Err(fail(McaasStatus::NullPointer, format!("null {what}")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(McaasStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn resolve(endpoint: &str) -> Result<SocketAddr, McaasStatus> {
    endpoint
        .to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| fail(McaasStatus::InvalidArgument, format!("cannot resolve {endpoint:?}")))
}

/// Opens a client for the node at `endpoint` ("host:port"). `lanes` bounds
/// the options per request; 0 means the default of 7.
///
/// # Safety
/// `endpoint` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mcaas_accel_client_new(
    endpoint: *const c_char,
    timeout_ms: u32,
    lanes: u32,
    out: *mut *mut McaasAccelClient,
) -> McaasStatus {
    guard(|| {
        if out.is_null() {
            return fail(McaasStatus::NullPointer, "null out");
        }
        let endpoint = match c_str(endpoint, "endpoint") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let addr = match resolve(endpoint) {
            Ok(a) => a,
            Err(s) => return s,
        };
        let config = ClientConfig {
            timeout: Duration::from_millis(u64::from(timeout_ms.max(1))),
            retransmits: 1,
            max_options: if lanes == 0 {
                ClientConfig::default().max_options
            } else {
                (lanes as usize).min(MAX_OPTIONS_PER_FRAME)
            },
        };
        match BlockingAccelClient::connect(addr, config) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(McaasAccelClient { inner }));
                McaasStatus::Ok
            }
            Err(e) => fail(McaasStatus::IoError, e.to_string()),
        }
    })
}

/// # Safety
/// `client` must come from [`mcaas_accel_client_new`] and not be freed.
#[no_mangle]
pub unsafe extern "C" fn mcaas_accel_client_ping(client: *mut McaasAccelClient) -> McaasStatus {
    guard(|| {
        let Some(c) = client.as_mut() else {
            return fail(McaasStatus::NullPointer, "null client");
        };
        match c.inner.ping() {
            Ok(()) => McaasStatus::Ok,
            Err(e) => client_status(&e),
        }
    })
}

/// Prices `count` options in one frame; `out` receives `count` results in
/// request order.
///
/// # Safety
/// `client` must be live; `options` must point to `count` items and `out` to
/// `count` writable items.
#[no_mangle]
pub unsafe extern "C" fn mcaas_accel_client_price(
    client: *mut McaasAccelClient,
    options: *const McaasWireOption,
    count: usize,
    out: *mut McaasLaneResult,
) -> McaasStatus {
    guard(|| {
        let Some(c) = client.as_mut() else {
            return fail(McaasStatus::NullPointer, "null client");
        };
        if out.is_null() {
            return fail(McaasStatus::NullPointer, "null out");
        }
        let opts = match slice(options, count) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let wire = match opts.iter().map(to_wire).collect::<Result<Vec<_>, _>>() {
            Ok(w) => w,
            Err(s) => return s,
        };
        match c.inner.price(&wire) {
            Ok(results) => {
                for (i, r) in results.iter().enumerate() {
                    *out.add(i) = from_result(r);
                }
                McaasStatus::Ok
            }
            Err(e) => client_status(&e),
        }
    })
}

/// # Safety
/// `client` must be NULL or come from [`mcaas_accel_client_new`]; it must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcaas_accel_client_free(client: *mut McaasAccelClient) {
    if !client.is_null() {
        drop(Box::from_raw(client));
    }
}

/// Starts an accelerator node on a background thread. `bind` is
/// "host:port" (port 0 picks a free port); `rate` > 0 selects modeled
/// pacing at that many paths per second per lane.
///
/// # Safety
/// `bind` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mcaas_node_start(
    bind: *const c_char,
    lanes: u32,
    rate: f64,
    out: *mut *mut McaasNode,
) -> McaasStatus {
    guard(|| {
        if out.is_null() {
            return fail(McaasStatus::NullPointer, "null out");
        }
        let bind = match c_str(bind, "bind").and_then(resolve) {
            Ok(a) => a,
            Err(s) => return s,
        };
        let config = NodeConfig {
            bind,
            lane_count: if lanes == 0 { NodeConfig::default().lane_count } else { lanes as usize },
            per_lane_rate: rate.max(0.0),
            pacing: if rate > 0.0 { Pacing::Modeled } else { Pacing::Native },
            ..NodeConfig::default()
        };
        if let Err(e) = config.validate() {
            return fail(McaasStatus::InvalidArgument, e.to_string());
        }
        let (ready_tx, ready_rx) = mpsc::channel();
        let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = match tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
            {
                Ok(rt) => rt,
                Err(e) => {
                    let _ = ready_tx.send(Err(e.to_string()));
                    return;
                }
            };
            rt.block_on(async move {
                let node = match AccelNode::bind(config).await {
                    Ok(n) => n,
                    Err(e) => {
                        let _ = ready_tx.send(Err(e.to_string()));
                        return;
                    }
                };
                let addr = node.local_addr().map_err(|e| e.to_string());
                let _ = ready_tx.send(addr);
                let _ = node
                    .run(async {
                        let _ = stop_rx.await;
                    })
                    .await;
            });
        });
        match ready_rx.recv() {
            Ok(Ok(addr)) => {
                *out = Box::into_raw(Box::new(McaasNode {
                    addr,
                    stop: Some(stop_tx),
                    thread: Some(thread),
                }));
                McaasStatus::Ok
            }
            Ok(Err(msg)) => {
                let _ = thread.join();
                fail(McaasStatus::IoError, msg)
            }
            Err(_) => {
                let _ = thread.join();
                fail(McaasStatus::IoError, "node thread exited during start-up")
            }
        }
    })
}

/// Port the node is listening on, or 0 for a NULL handle.
///
/// # Safety
/// `node` must be NULL or a live handle from [`mcaas_node_start`].
#[no_mangle]
pub unsafe extern "C" fn mcaas_node_port(node: *const McaasNode) -> u16 {
    node.as_ref().map_or(0, |n| n.addr.port())
}

/// Stops the node and releases the handle.
///
/// # Safety
/// `node` must be NULL or a live handle from [`mcaas_node_start`]; it must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcaas_node_stop(node: *mut McaasNode) {
    if node.is_null() {
        return;
    }
    let mut node = Box::from_raw(node);
    if let Some(stop) = node.stop.take() {
        let _ = stop.send(());
    }
    if let Some(t) = node.thread.take() {
        let _ = t.join();
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mcaas_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Lane status code for an OK result.
pub const MCAAS_LANE_OK: u8 = LaneStatus::Ok as u8;
