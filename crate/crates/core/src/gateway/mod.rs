//! Pricing service plane: REST front end, splitter, round-robin balancer,
//! and worker pools with pluggable backends.

pub mod backend;
pub mod config;
pub mod http;
pub mod metrics;
pub mod pool;
mod request;
mod service;

pub use backend::{
    Backend, BackendError, BackendKind, BackendProfile, BackendState, Lifecycle, LocalCpu,
    Modeled, RemoteAccel, Served, WorkerSlot,
};
pub use config::{BackendConfig, GatewayConfig};
pub use pool::{BackendFactory, Dispatched, Pool, SubOutcome, Worker};
pub use request::{
    split, OptionResult, OptionStatus, PriceResult, PricingRequest, SubRequest, Timing, MAX_BATCH,
};
pub use service::{Gateway, PoolHealth, ServiceError};
