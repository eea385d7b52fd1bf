use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Call or put.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    pub fn payoff(self, terminal: f64, strike: f64) -> f64 {
        match self {
            OptionKind::Call => (terminal - strike).max(0.0),
            OptionKind::Put => (strike - terminal).max(0.0),
        }
    }
}

impl std::str::FromStr for OptionKind {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "call" | "c" => Ok(OptionKind::Call),
            "put" | "p" => Ok(OptionKind::Put),
            _ => Err(PricingError::Invalid {
                field: "kind",
                reason: format!("expected call or put, got {s:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl PricingError {
    /// Name of the offending input field.
    pub fn field(&self) -> &'static str {
        match self {
            PricingError::Invalid { field, .. } => field,
        }
    }
}

/// A single European option contract.
///
/// `rate` is continuously compounded and may be negative. `volatility` and
/// `rate` are annualised; `expiry` is in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub spot: f64,
    pub strike: f64,
    pub rate: f64,
    pub volatility: f64,
    pub expiry: f64,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn call(spot: f64, strike: f64, rate: f64, volatility: f64, expiry: f64) -> Self {
        Self {
            spot,
            strike,
            rate,
            volatility,
            expiry,
            kind: OptionKind::Call,
        }
    }

    pub fn put(spot: f64, strike: f64, rate: f64, volatility: f64, expiry: f64) -> Self {
        Self {
            kind: OptionKind::Put,
            ..Self::call(spot, strike, rate, volatility, expiry)
        }
    }

    pub fn with_kind(self, kind: OptionKind) -> Self {
        Self { kind, ..self }
    }

    pub fn validate(&self) -> Result<(), PricingError> {
        positive("spot", self.spot)?;
        positive("strike", self.strike)?;
        positive("expiry", self.expiry)?;
        finite("rate", self.rate)?;
        finite("volatility", self.volatility)?;
        if self.volatility < 0.0 {
            return Err(PricingError::Invalid {
                field: "volatility",
                reason: format!("must be >= 0, got {}", self.volatility),
            });
        }
        Ok(())
    }

    pub fn discount_factor(&self) -> f64 {
        (-self.rate * self.expiry).exp()
    }
}

fn finite(field: &'static str, v: f64) -> Result<(), PricingError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(PricingError::Invalid {
            field,
            reason: format!("must be finite, got {v}"),
        })
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), PricingError> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(PricingError::Invalid {
            field,
            reason: format!("must be > 0, got {v}"),
        })
    }
}

/// Simulation controls: number of paths and the generator seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimParams {
    pub paths: u64,
    pub seed: u64,
}

impl SimParams {
    pub fn new(paths: u64, seed: u64) -> Self {
        Self { paths, seed }
    }

    pub fn validate(&self) -> Result<(), PricingError> {
        if self.paths == 0 {
            return Err(PricingError::Invalid {
                field: "paths",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceEstimate {
    pub price: f64,
    pub std_error: f64,
    pub paths_used: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_field() {
        let mut s = OptionSpec::call(100.0, 100.0, 0.05, 0.2, 1.0);
        assert!(s.validate().is_ok());
        s.spot = 0.0;
        assert_eq!(s.validate().unwrap_err().field(), "spot");
        s.spot = 100.0;
        s.strike = f64::NAN;
        assert_eq!(s.validate().unwrap_err().field(), "strike");
        s.strike = 100.0;
        s.expiry = -1.0;
        assert_eq!(s.validate().unwrap_err().field(), "expiry");
        s.expiry = 1.0;
        s.volatility = -0.1;
        assert_eq!(s.validate().unwrap_err().field(), "volatility");
        s.volatility = 0.2;
        s.rate = f64::INFINITY;
        assert_eq!(s.validate().unwrap_err().field(), "rate");
    }

    #[test]
    fn negative_rate_is_allowed() {
        assert!(OptionSpec::put(100.0, 90.0, -0.02, 0.3, 0.5).validate().is_ok());
    }

    #[test]
    fn zero_paths_rejected() {
        assert_eq!(SimParams::new(0, 1).validate().unwrap_err().field(), "paths");
    }

    #[test]
    fn kind_parse() {
        assert_eq!("Call".parse::<OptionKind>().unwrap(), OptionKind::Call);
        assert_eq!("put".parse::<OptionKind>().unwrap(), OptionKind::Put);
        assert!("straddle".parse::<OptionKind>().is_err());
    }
}
