//! Benchmark driver for the pricing gateway.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcaas_core::bench::{
    emit, read_records, render, run_sweep, summarize, write_records, Axis, Format, SweepSpec,
};

#[derive(Debug, Parser)]
#[command(name = "benchctl", version, about = "Cold/hot latency sweeps against the pricing gateway")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a sweep and write records plus a report.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
        /// Axis values, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
        /// Paths per option (held fixed on the batch axis).
        #[arg(long, default_value_t = 500_000)]
        paths: u64,
        /// Options per request (held fixed on the paths axis).
        #[arg(long, default_value_t = 1)]
        batch: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        backends: Vec<String>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        concurrency: usize,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        target: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "csv,json")]
        format: Vec<Format>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Summarize the records of an earlier sweep.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "csv,json")]
        format: Vec<Format>,
    },
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("benchctl: {e}");
            ExitCode::FAILURE
        }
    }
}

async fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Sweep {
            axis,
            values,
            paths,
            batch,
            backends,
            reps,
            concurrency,
            target,
            out,
            format,
            seed,
        } => {
            let spec = SweepSpec {
                axis,
                values,
                paths,
                batch,
                backends,
                repetitions: reps,
                concurrency,
                seed_base: seed,
            };
            let outcome = run_sweep(&spec, &target).await?;
            write_records(&out, &outcome.records)?;
            let report = summarize(&outcome.records);
            emit(&report, &out, &format)?;
            print!("{}", render(&report));
            if outcome.dropped > 0 {
                eprintln!("benchctl: {} requests failed and were dropped", outcome.dropped);
            }
        }
        Cmd::Report { input, format } => {
            let records = read_records(&input)?;
            let report = summarize(&records);
            emit(&report, &input, &format)?;
            print!("{}", render(&report));
        }
    }
    Ok(())
}
