//! Risk-neutral Monte-Carlo pricing under geometric Brownian motion.
//!
//! European payoffs only depend on the terminal price, so each path is a
//! single exact draw `S_T = S_0 exp((r - s^2/2) T + s sqrt(T) Z)`.
//!
//! Paths are accumulated in fixed blocks of [`BLOCK_PATHS`]. Each block runs
//! a sequential Welford pass over its own slice of the normal stream, and
//! block results are merged left to right. The block layout depends only on
//! the path count, so the sequential and parallel entry points return
//! bit-identical estimates.

use rayon::prelude::*;

use super::rng::NormalStream;
use super::spec::{OptionSpec, PriceEstimate, PricingError, SimParams};
use super::stats::RunningMoments;

/// Paths per accumulation block. Even, so blocks never split a Box-Muller pair.
pub const BLOCK_PATHS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy)]
struct Terminal {
    spot: f64,
    drift: f64,
    diffusion: f64,
}

impl Terminal {
    fn new(spec: &OptionSpec) -> Self {
        let v = spec.volatility;
        Self {
            spot: spec.spot,
            drift: (spec.rate - 0.5 * v * v) * spec.expiry,
            diffusion: v * spec.expiry.sqrt(),
        }
    }

    #[inline]
    fn at(&self, z: f64) -> f64 {
        self.spot * (self.drift + self.diffusion * z).exp()
    }
}

fn check(spec: &OptionSpec, sim: &SimParams) -> Result<(), PricingError> {
    spec.validate()?;
    sim.validate()
}

/// Draws `sim.paths` terminal prices.
pub fn simulate_terminal(spec: &OptionSpec, sim: &SimParams) -> Result<Vec<f64>, PricingError> {
    check(spec, sim)?;
    let t = Terminal::new(spec);
    Ok(NormalStream::new(sim.seed)
        .take(sim.paths as usize)
        .map(|z| t.at(z))
        .collect())
}

fn block_moments(spec: &OptionSpec, t: &Terminal, seed: u64, start: u64, len: u64) -> RunningMoments {
    let mut acc = RunningMoments::new();
    let mut normals = NormalStream::starting_at(seed, start);
    for _ in 0..len {
        acc.push(spec.kind.payoff(t.at(normals.next_normal()), spec.strike));
    }
    acc
}

fn blocks(paths: u64) -> impl Iterator<Item = (u64, u64)> + Clone {
    (0..paths.div_ceil(BLOCK_PATHS)).map(move |b| {
        let start = b * BLOCK_PATHS;
        (start, BLOCK_PATHS.min(paths - start))
    })
}

fn finish(spec: &OptionSpec, acc: RunningMoments) -> PriceEstimate {
    let df = spec.discount_factor();
    let n = acc.count();
    PriceEstimate {
        price: df * acc.mean(),
        std_error: df * acc.sample_std() / (n as f64).sqrt(),
        paths_used: n,
    }
}

/// Monte-Carlo price with its standard error.
pub fn price_mc(spec: &OptionSpec, sim: &SimParams) -> Result<PriceEstimate, PricingError> {
    check(spec, sim)?;
    let t = Terminal::new(spec);
    let acc = blocks(sim.paths)
        .map(|(start, len)| block_moments(spec, &t, sim.seed, start, len))
        .fold(RunningMoments::new(), RunningMoments::merge);
    Ok(finish(spec, acc))
}

/// Same estimate as [`price_mc`], with blocks evaluated on the rayon pool.
pub fn price_mc_parallel(spec: &OptionSpec, sim: &SimParams) -> Result<PriceEstimate, PricingError> {
    check(spec, sim)?;
    let t = Terminal::new(spec);
    let parts: Vec<RunningMoments> = blocks(sim.paths)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(start, len)| block_moments(spec, &t, sim.seed, start, len))
        .collect();
    let acc = parts.into_iter().fold(RunningMoments::new(), RunningMoments::merge);
    Ok(finish(spec, acc))
}

/// Prices against an explicit terminal sample (e.g. one shared between a
/// call and a put).
pub fn price_terminals(spec: &OptionSpec, terminals: &[f64]) -> Result<PriceEstimate, PricingError> {
    spec.validate()?;
    if terminals.is_empty() {
        return Err(PricingError::Invalid {
            field: "paths",
            reason: "empty terminal sample".into(),
        });
    }
    let acc: RunningMoments = terminals
        .iter()
        .map(|&s| spec.kind.payoff(s, spec.strike))
        .collect();
    Ok(finish(spec, acc))
}
