//! Datagram protocol spoken between the service and the accelerator node.

mod client;
mod frame;

pub use client::{AccelClient, BlockingAccelClient, ClientConfig, ClientError, ClientStats};
pub use frame::{
    decode, decode_header, encode, AccelFrame, Codec, ErrorCode, LaneStatus, MsgType, Payload,
    ProtocolError, WireOption, WireResult, DEFAULT_LANES, HEADER_LEN, MAGIC, MAX_DATAGRAM,
    MAX_DETAIL_LEN, MAX_OPTIONS_PER_FRAME, WIRE_OPTION_LEN, WIRE_RESULT_LEN,
};
