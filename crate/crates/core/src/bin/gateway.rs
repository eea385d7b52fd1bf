//! Pricing gateway: REST API in front of the worker pools.

use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use mcaas_core::gateway::{http, Gateway, GatewayConfig};

#[derive(Debug, Parser)]
#[command(name = "mcaas-gateway", version, about = "Monte-Carlo pricing REST service")]
struct Args {
    /// JSON config file; the built-in single-CPU-backend config if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load(args: &Args) -> Result<GatewayConfig, Box<dyn std::error::Error>> {
    let mut cfg = match &args.config {
        Some(p) => GatewayConfig::load(p)?,
        None => GatewayConfig::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok())?;
    Ok(cfg)
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("mcaas-gateway: {e}");
            std::process::exit(2);
        }
    };
    let listener = match tokio::net::TcpListener::bind(cfg.bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("mcaas-gateway: cannot bind {}: {e}", cfg.bind);
            std::process::exit(1);
        }
    };
    let gateway = Arc::new(Gateway::from_config(&cfg));
    tracing::info!(bind = %cfg.bind, backends = ?gateway.backend_names(), "listening");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = http::serve(listener, gateway, shutdown).await {
        eprintln!("mcaas-gateway: {e}");
        std::process::exit(1);
    }
}
