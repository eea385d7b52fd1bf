//! Simulated disaggregated pricing accelerator.

use std::net::SocketAddr;
use std::time::Duration;

use clap::Parser;
use mcaas_core::node::{serve, NodeConfig, Pacing};
use mcaas_core::wire::DEFAULT_LANES;

#[derive(Debug, Parser)]
#[command(name = "accel-node", version, about = "UDP Monte-Carlo pricing node")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:7700")]
    bind: SocketAddr,
    /// Parallel pricing lanes (options per frame).
    #[arg(long, default_value_t = DEFAULT_LANES)]
    lanes: usize,
    /// Paths per second per lane for modeled pacing.
    #[arg(long, default_value_t = 0.0)]
    rate: f64,
    #[arg(long, value_enum, default_value_t = Pacing::Native)]
    pacing: Pacing,
    /// Fixed per-frame latency under modeled pacing, in milliseconds.
    #[arg(long, default_value_t = 0.0)]
    frame_latency_ms: f64,
    /// Frames processed concurrently.
    #[arg(long, default_value_t = 4)]
    max_inflight: usize,
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    let config = NodeConfig {
        bind: args.bind,
        lane_count: args.lanes,
        per_lane_rate: args.rate,
        pacing: args.pacing,
        frame_latency: Duration::from_secs_f64(args.frame_latency_ms.max(0.0) / 1e3),
        max_inflight: args.max_inflight,
    };
    tracing::info!(?config, "starting accel-node");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    match serve(config, shutdown).await {
        Ok(stats) => {
            println!("{}", serde_json::to_string(&stats).expect("stats serialize"));
        }
        Err(e) => {
            eprintln!("accel-node: {e}");
            std::process::exit(1);
        }
    }
}
