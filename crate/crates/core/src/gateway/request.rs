use serde::{Deserialize, Serialize};

use crate::pricing::OptionSpec;

pub const MAX_BATCH: usize = 10_000;

/// A batch pricing request. Option `i` is simulated with seed `seed_base + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingRequest {
    pub options: Vec<OptionSpec>,
    pub paths: u64,
    pub seed_base: u64,
}

impl PricingRequest {
    pub fn new(options: Vec<OptionSpec>, paths: u64, seed_base: u64) -> Self {
        Self {
            options,
            paths,
            seed_base,
        }
    }

    /// Request-level checks. Individual option values are validated by the
    /// backends and reported per option.
    pub fn validate(&self) -> Result<(), (String, String)> {
        if self.options.is_empty() || self.options.len() > MAX_BATCH {
            return Err((
                "options".into(),
                format!("batch size must be in [1, {MAX_BATCH}], got {}", self.options.len()),
            ));
        }
        if self.paths == 0 {
            return Err(("paths".into(), "must be >= 1".into()));
        }
        Ok(())
    }
}

/// Contiguous slice of a request, carrying the global index of its first option.
#[derive(Debug, Clone, PartialEq)]
pub struct SubRequest {
    pub offset: usize,
    pub options: Vec<OptionSpec>,
    pub paths: u64,
    pub seed_base: u64,
}

impl SubRequest {
    /// Seed of the `i`-th option of this sub-request.
    pub fn seed(&self, i: usize) -> u64 {
        self.seed_base.wrapping_add((self.offset + i) as u64)
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }
}

/// Cuts a request into consecutive sub-requests of at most `chunk_size`
/// options. A `chunk_size` of 0 is treated as 1.
pub fn split(request: &PricingRequest, chunk_size: usize) -> Vec<SubRequest> {
    request
        .options
        .chunks(chunk_size.max(1))
        .enumerate()
        .map(|(k, chunk)| SubRequest {
            offset: k * chunk_size.max(1),
            options: chunk.to_vec(),
            paths: request.paths,
            seed_base: request.seed_base,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionStatus {
    Ok,
    InvalidOption,
    LaneError,
    BackendError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionResult {
    pub price: f64,
    pub std_error: f64,
    pub status: OptionStatus,
}

impl OptionResult {
    pub fn failed(status: OptionStatus) -> Self {
        Self {
            price: 0.0,
            std_error: 0.0,
            status,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Worker wall time, summed over sub-batches.
    pub processing_s: f64,
    /// Request receipt to response.
    pub e2e_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub results: Vec<OptionResult>,
    pub timing: Timing,
    #[serde(default)]
    pub backend: String,
    /// True when any sub-batch landed on a cold worker.
    #[serde(default)]
    pub cold: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(n: usize) -> PricingRequest {
        PricingRequest::new(
            vec![OptionSpec::call(100.0, 100.0, 0.0, 0.2, 1.0); n],
            10,
            1000,
        )
    }

    #[test]
    fn split_counts() {
        let s = split(&req(100), 7);
        assert_eq!(s.len(), 15);
        assert!(s[..14].iter().all(|b| b.len() == 7));
        assert_eq!(s[14].len(), 2);
        assert_eq!(split(&req(7), 7).len(), 1);
        let one = split(&req(1), 7);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].len(), 1);
        let ten = split(&req(10), 7);
        assert_eq!(ten.iter().map(SubRequest::len).collect::<Vec<_>>(), [7, 3]);
    }

    #[test]
    fn split_keeps_global_seeds() {
        let s = split(&req(10), 3);
        let seeds: Vec<u64> = s
            .iter()
            .flat_map(|b| (0..b.len()).map(move |i| b.seed(i)))
            .collect();
        assert_eq!(seeds, (1000..1010).collect::<Vec<_>>());
    }

    #[test]
    fn request_validation() {
        assert!(req(1).validate().is_ok());
        assert_eq!(req(0).validate().unwrap_err().0, "options");
        assert_eq!(req(MAX_BATCH + 1).validate().unwrap_err().0, "options");
        let mut r = req(2);
        r.paths = 0;
        assert_eq!(r.validate().unwrap_err().0, "paths");
    }
}
