//! Monte-Carlo option pricing as a microservice.
//!
//! * [`pricing`]: GBM Monte-Carlo engine and Black-Scholes reference.
//! * [`wire`]: datagram codec and client for the accelerator node.
//! * [`node`]: the simulated network-attached accelerator.
//! * [`gateway`]: REST front end, splitter, round-robin balancer, workers.
//! * [`bench`]: sweep driver, cold/hot summaries and report files.

pub mod bench;
pub mod gateway;
pub mod node;
pub mod pricing;
pub mod wire;
