//! European option pricing: Monte-Carlo engine and closed-form reference.

mod black_scholes;
mod mc;
pub mod rng;
mod spec;
pub mod stats;

pub use black_scholes::{norm_cdf, price_bs};
pub use mc::{price_mc, price_mc_parallel, price_terminals, simulate_terminal, BLOCK_PATHS};
pub use rng::NormalStream;
pub use spec::{OptionKind, OptionSpec, PriceEstimate, PricingError, SimParams};
