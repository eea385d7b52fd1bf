//! Closed-form Black-Scholes prices, used to check the Monte-Carlo engine.

use std::f64::consts::FRAC_1_SQRT_2;

use super::spec::{OptionKind, OptionSpec, PricingError};

/// Standard normal CDF. Built on `erfc` so the lower tail keeps full
/// relative precision.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn price_bs(spec: &OptionSpec) -> Result<f64, PricingError> {
    spec.validate()?;
    let df = spec.discount_factor();
    let OptionSpec {
        spot,
        strike,
        rate,
        volatility: vol,
        expiry,
        kind,
    } = *spec;

    // Zero volatility: the terminal price is the forward, known for certain.
    if vol == 0.0 {
        let forward = spot * (rate * expiry).exp();
        return Ok(df * kind.payoff(forward, strike));
    }

    let vsqrt = vol * expiry.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * vol * vol) * expiry) / vsqrt;
    let d2 = d1 - vsqrt;
    let price = match kind {
        OptionKind::Call => spot * norm_cdf(d1) - strike * df * norm_cdf(d2),
        OptionKind::Put => strike * df * norm_cdf(-d2) - spot * norm_cdf(-d1),
    };
    Ok(price.max(0.0))
}
