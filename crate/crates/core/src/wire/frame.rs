//! Accelerator datagram layout.
//!
//! All integers and floats are little-endian.
//!
//! | section         | bytes | fields                                                                 |
//! |-----------------|-------|------------------------------------------------------------------------|
//! | header          | 13    | magic `MCE1` [4], msg_type [1], request_id [8]                         |
//! | PriceRequest    | 1+53n | option_count [1], n x (spot, strike, rate, volatility, expiry [8 each], kind [1], paths [4], seed [8]) |
//! | PriceResponse   | 1+17n | option_count [1], n x (price [8], std_error [8], status [1])           |
//! | Ping / Pong     | 0     |                                                                        |
//! | Error           | 3+len | code [1], detail_len [2], detail (UTF-8) [len]                         |
//!
//! Message types: 0x01 PriceRequest, 0x02 PriceResponse, 0x03 Ping, 0x04 Pong,
//! 0x05 Error. Option kind: 0 call, 1 put. Lane status: 0 ok, 1 invalid
//! option, 2 lane error. Error codes: see [`ErrorCode`].

use thiserror::Error;

use crate::pricing::{OptionKind, OptionSpec, SimParams};

pub const MAGIC: [u8; 4] = *b"MCE1";
pub const HEADER_LEN: usize = 13;
pub const WIRE_OPTION_LEN: usize = 53;
pub const WIRE_RESULT_LEN: usize = 17;
pub const MAX_DATAGRAM: usize = 1400;
/// Lane count of the default node, and the default per-frame option limit.
pub const DEFAULT_LANES: usize = 7;
/// Largest option count whose request still fits in one datagram.
pub const MAX_OPTIONS_PER_FRAME: usize = (MAX_DATAGRAM - HEADER_LEN - 1) / WIRE_OPTION_LEN;
pub const MAX_DETAIL_LEN: usize = MAX_DATAGRAM - HEADER_LEN - 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("bad magic")]
    BadMagic,
    #[error("unknown message type 0x{0:02x}")]
    BadType(u8),
    #[error("bad length: expected {expected} bytes, got {actual}")]
    BadLength { expected: usize, actual: usize },
    #[error("bad value in {0}")]
    BadValue(&'static str),
    #[error("frame too large: {count} entries, limit {limit}")]
    FrameTooLarge { count: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    PriceRequest = 0x01,
    PriceResponse = 0x02,
    Ping = 0x03,
    Pong = 0x04,
    Error = 0x05,
}

impl TryFrom<u8> for MsgType {
    type Error = ProtocolError;

    fn try_from(b: u8) -> Result<Self, ProtocolError> {
        Ok(match b {
            0x01 => MsgType::PriceRequest,
            0x02 => MsgType::PriceResponse,
            0x03 => MsgType::Ping,
            0x04 => MsgType::Pong,
            0x05 => MsgType::Error,
            other => return Err(ProtocolError::BadType(other)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum LaneStatus {
    Ok = 0,
    InvalidOption = 1,
    LaneError = 2,
}

impl TryFrom<u8> for LaneStatus {
    type Error = ProtocolError;

    fn try_from(b: u8) -> Result<Self, ProtocolError> {
        match b {
            0 => Ok(LaneStatus::Ok),
            1 => Ok(LaneStatus::InvalidOption),
            2 => Ok(LaneStatus::LaneError),
            _ => Err(ProtocolError::BadValue("status")),
        }
    }
}

/// Codes carried by Error frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ErrorCode {
    BadType = 1,
    BadLength = 2,
    BadValue = 3,
    FrameTooLarge = 4,
    Internal = 5,
}

impl TryFrom<u8> for ErrorCode {
    type Error = ProtocolError;

    fn try_from(b: u8) -> Result<Self, ProtocolError> {
        Ok(match b {
            1 => ErrorCode::BadType,
            2 => ErrorCode::BadLength,
            3 => ErrorCode::BadValue,
            4 => ErrorCode::FrameTooLarge,
            5 => ErrorCode::Internal,
            _ => return Err(ProtocolError::BadValue("error code")),
        })
    }
}

impl From<&ProtocolError> for ErrorCode {
    fn from(e: &ProtocolError) -> Self {
        match e {
            ProtocolError::BadMagic | ProtocolError::BadType(_) => ErrorCode::BadType,
            ProtocolError::BadLength { .. } => ErrorCode::BadLength,
            ProtocolError::BadValue(_) => ErrorCode::BadValue,
            ProtocolError::FrameTooLarge { .. } => ErrorCode::FrameTooLarge,
        }
    }
}

/// One option as carried in a PriceRequest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireOption {
    pub spot: f64,
    pub strike: f64,
    pub rate: f64,
    pub volatility: f64,
    pub expiry: f64,
    pub kind: OptionKind,
    pub paths: u32,
    pub seed: u64,
}

impl WireOption {
    pub fn new(spec: &OptionSpec, paths: u32, seed: u64) -> Self {
        Self {
            spot: spec.spot,
            strike: spec.strike,
            rate: spec.rate,
            volatility: spec.volatility,
            expiry: spec.expiry,
            kind: spec.kind,
            paths,
            seed,
        }
    }

    pub fn spec(&self) -> OptionSpec {
        OptionSpec {
            spot: self.spot,
            strike: self.strike,
            rate: self.rate,
            volatility: self.volatility,
            expiry: self.expiry,
            kind: self.kind,
        }
    }

    pub fn sim(&self) -> SimParams {
        SimParams::new(u64::from(self.paths), self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireResult {
    pub price: f64,
    pub std_error: f64,
    pub status: LaneStatus,
}

impl WireResult {
    pub fn failed(status: LaneStatus) -> Self {
        Self {
            price: 0.0,
            std_error: 0.0,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    PriceRequest(Vec<WireOption>),
    PriceResponse(Vec<WireResult>),
    Ping,
    Pong,
    Error { code: ErrorCode, detail: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelFrame {
    pub request_id: u64,
    pub payload: Payload,
}

impl AccelFrame {
    pub fn new(request_id: u64, payload: Payload) -> Self {
        Self {
            request_id,
            payload,
        }
    }

    pub fn msg_type(&self) -> MsgType {
        match self.payload {
            Payload::PriceRequest(_) => MsgType::PriceRequest,
            Payload::PriceResponse(_) => MsgType::PriceResponse,
            Payload::Ping => MsgType::Ping,
            Payload::Pong => MsgType::Pong,
            Payload::Error { .. } => MsgType::Error,
        }
    }
}

/// Encoder/decoder with a per-frame option limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Codec {
    max_options: usize,
}

impl Default for Codec {
    fn default() -> Self {
        Self {
            max_options: DEFAULT_LANES,
        }
    }
}

impl Codec {
    /// `max_options` is clamped to what fits in a single datagram.
    pub fn new(max_options: usize) -> Self {
        Self {
            max_options: max_options.clamp(1, MAX_OPTIONS_PER_FRAME),
        }
    }

    /// Codec accepting the largest batch a datagram can hold.
    pub fn permissive() -> Self {
        Self::new(MAX_OPTIONS_PER_FRAME)
    }

    pub fn max_options(&self) -> usize {
        self.max_options
    }

    fn check_count(&self, count: usize) -> Result<(), ProtocolError> {
        if count == 0 || count > self.max_options {
            return Err(ProtocolError::FrameTooLarge {
                count,
                limit: self.max_options,
            });
        }
        Ok(())
    }

    pub fn encode(&self, frame: &AccelFrame) -> Result<Vec<u8>, ProtocolError> {
        let mut out = Vec::with_capacity(64);
        out.extend_from_slice(&MAGIC);
        out.push(frame.msg_type() as u8);
        out.extend_from_slice(&frame.request_id.to_le_bytes());
        match &frame.payload {
            Payload::PriceRequest(options) => {
                self.check_count(options.len())?;
                out.push(options.len() as u8);
                for o in options {
                    for (name, v) in [
                        ("spot", o.spot),
                        ("strike", o.strike),
                        ("rate", o.rate),
                        ("volatility", o.volatility),
                        ("expiry", o.expiry),
                    ] {
                        if !v.is_finite() {
                            return Err(ProtocolError::BadValue(name));
                        }
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                    out.push(match o.kind {
                        OptionKind::Call => 0,
                        OptionKind::Put => 1,
                    });
                    out.extend_from_slice(&o.paths.to_le_bytes());
                    out.extend_from_slice(&o.seed.to_le_bytes());
                }
            }
            Payload::PriceResponse(results) => {
                self.check_count(results.len())?;
                out.push(results.len() as u8);
                for r in results {
                    if !r.price.is_finite() {
                        return Err(ProtocolError::BadValue("price"));
                    }
                    if !r.std_error.is_finite() {
                        return Err(ProtocolError::BadValue("std_error"));
                    }
                    out.extend_from_slice(&r.price.to_le_bytes());
                    out.extend_from_slice(&r.std_error.to_le_bytes());
                    out.push(r.status as u8);
                }
            }
            Payload::Ping | Payload::Pong => {}
            Payload::Error { code, detail } => {
                if detail.len() > MAX_DETAIL_LEN {
                    return Err(ProtocolError::FrameTooLarge {
                        count: detail.len(),
                        limit: MAX_DETAIL_LEN,
                    });
                }
                out.push(*code as u8);
                out.extend_from_slice(&(detail.len() as u16).to_le_bytes());
                out.extend_from_slice(detail.as_bytes());
            }
        }
        debug_assert!(out.len() <= MAX_DATAGRAM);
        Ok(out)
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<AccelFrame, ProtocolError> {
        let (msg_type, request_id) = decode_header(bytes)?;
        let msg_type = MsgType::try_from(msg_type)?;
        let body = &bytes[HEADER_LEN..];
        let payload = match msg_type {
            MsgType::Ping | MsgType::Pong => {
                expect_len(body, 0)?;
                if msg_type == MsgType::Ping {
                    Payload::Ping
                } else {
                    Payload::Pong
                }
            }
            MsgType::PriceRequest => {
                let count = self.body_count(body, WIRE_OPTION_LEN)?;
                let options = body[1..]
                    .chunks_exact(WIRE_OPTION_LEN)
                    .map(decode_option)
                    .collect::<Result<Vec<_>, _>>()?;
                debug_assert_eq!(options.len(), count);
                Payload::PriceRequest(options)
            }
            MsgType::PriceResponse => {
                self.body_count(body, WIRE_RESULT_LEN)?;
                let results = body[1..]
                    .chunks_exact(WIRE_RESULT_LEN)
                    .map(decode_result)
                    .collect::<Result<Vec<_>, _>>()?;
                Payload::PriceResponse(results)
            }
            MsgType::Error => {
                if body.len() < 3 {
                    return Err(ProtocolError::BadLength {
                        expected: 3,
                        actual: body.len(),
                    });
                }
                let code = ErrorCode::try_from(body[0])?;
                let len = u16::from_le_bytes([body[1], body[2]]) as usize;
                expect_len(body, 3 + len)?;
                let detail = std::str::from_utf8(&body[3..])
                    .map_err(|_| ProtocolError::BadValue("detail"))?
                    .to_owned();
                Payload::Error { code, detail }
            }
        };
        Ok(AccelFrame {
            request_id,
            payload,
        })
    }

    /// Validates the count byte and the exact body length for `count` items.
    fn body_count(&self, body: &[u8], item_len: usize) -> Result<usize, ProtocolError> {
        let Some(&count) = body.first() else {
            return Err(ProtocolError::BadLength {
                expected: 1,
                actual: 0,
            });
        };
        let count = count as usize;
        if count == 0 {
            return Err(ProtocolError::BadValue("option_count"));
        }
        if count > self.max_options {
            return Err(ProtocolError::FrameTooLarge {
                count,
                limit: self.max_options,
            });
        }
        expect_len(body, 1 + count * item_len)?;
        Ok(count)
    }
}

fn expect_len(body: &[u8], expected: usize) -> Result<(), ProtocolError> {
    if body.len() != expected {
        return Err(ProtocolError::BadLength {
            expected: HEADER_LEN + expected,
            actual: HEADER_LEN + body.len(),
        });
    }
    Ok(())
}

/// Parses only the header, returning the raw message type byte and the
/// request id. Fails on short input or wrong magic.
pub fn decode_header(bytes: &[u8]) -> Result<(u8, u64), ProtocolError> {
    if bytes.len() >= 4 && bytes[..4] != MAGIC {
        return Err(ProtocolError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        if bytes.len() < 4 && !MAGIC.starts_with(bytes) {
            return Err(ProtocolError::BadMagic);
        }
        return Err(ProtocolError::BadLength {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    Ok((bytes[4], le_u64(&bytes[5..13])))
}

fn le_u64(b: &[u8]) -> u64 {
    u64::from_le_bytes(b[..8].try_into().expect("8 bytes"))
}

fn le_f64(b: &[u8], field: &'static str) -> Result<f64, ProtocolError> {
    let v = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ProtocolError::BadValue(field))
    }
}

fn decode_option(b: &[u8]) -> Result<WireOption, ProtocolError> {
    let kind = match b[40] {
        0 => OptionKind::Call,
        1 => OptionKind::Put,
        _ => return Err(ProtocolError::BadValue("kind")),
    };
    Ok(WireOption {
        spot: le_f64(&b[0..8], "spot")?,
        strike: le_f64(&b[8..16], "strike")?,
        rate: le_f64(&b[16..24], "rate")?,
        volatility: le_f64(&b[24..32], "volatility")?,
        expiry: le_f64(&b[32..40], "expiry")?,
        kind,
        paths: u32::from_le_bytes(b[41..45].try_into().expect("4 bytes")),
        seed: le_u64(&b[45..53]),
    })
}

fn decode_result(b: &[u8]) -> Result<WireResult, ProtocolError> {
    Ok(WireResult {
        price: le_f64(&b[0..8], "price")?,
        std_error: le_f64(&b[8..16], "std_error")?,
        status: LaneStatus::try_from(b[16])?,
    })
}

/// Encodes with the default codec (7 options per frame).
pub fn encode(frame: &AccelFrame) -> Result<Vec<u8>, ProtocolError> {
    Codec::default().encode(frame)
}

/// Decodes with the default codec (7 options per frame).
pub fn decode(bytes: &[u8]) -> Result<AccelFrame, ProtocolError> {
    Codec::default().decode(bytes)
}
