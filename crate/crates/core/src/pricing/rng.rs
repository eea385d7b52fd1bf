//! Seedable random streams.
//!
//! Uniforms come from a counter-based SplitMix64: the seed is first mixed
//! into a 64-bit key, and draw `k` is `mix(key + (k + 1) * GAMMA)`. Any draw
//! can be computed without generating its predecessors, which is what lets
//! the path loop be partitioned into blocks without changing the stream.
//!
//! Standard normals come from the Box-Muller transform applied to uniform
//! pair `(2j, 2j + 1)`, producing normals `2j` (cosine branch) and `2j + 1`
//! (sine branch).

use std::f64::consts::TAU;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    key: u64,
    counter: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self::at(seed, 0)
    }

    /// Generator positioned so that the next draw is draw number `counter`.
    pub fn at(seed: u64, counter: u64) -> Self {
        Self {
            key: mix(seed ^ GAMMA),
            counter,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Stream of standard normal draws.
#[derive(Debug, Clone)]
pub struct NormalStream {
    uniforms: SplitMix64,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self::starting_at(seed, 0)
    }

    /// Stream whose next value is normal number `index` of the seed's sequence.
    pub fn starting_at(seed: u64, index: u64) -> Self {
        let mut stream = Self {
            uniforms: SplitMix64::at(seed, (index / 2) * 2),
            spare: None,
        };
        if index % 2 == 1 {
            stream.next_normal();
        }
        stream
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.uniforms.next_f64();
        let u2 = self.uniforms.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

impl Iterator for NormalStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_normal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<f64> = NormalStream::new(99).take(1000).collect();
        let b: Vec<f64> = NormalStream::new(99).take(1000).collect();
        assert_eq!(a, b);
        let c: Vec<f64> = NormalStream::new(100).take(1000).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn seek_matches_sequential() {
        let all: Vec<f64> = NormalStream::new(7).take(64).collect();
        for start in [0u64, 1, 2, 17, 33, 63] {
            let tail: Vec<f64> = NormalStream::starting_at(7, start)
                .take(64 - start as usize)
                .collect();
            assert_eq!(&all[start as usize..], &tail[..], "start={start}");
        }
    }

    #[test]
    fn uniform_range() {
        let mut g = SplitMix64::new(0);
        for _ in 0..10_000 {
            let u = g.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn moments_one_million_draws() {
        let n = 1_000_000u64;
        let (mut mean, mut m2) = (0.0f64, 0.0f64);
        for (i, z) in NormalStream::new(1).take(n as usize).enumerate() {
            let k = (i + 1) as f64;
            let d = z - mean;
            mean += d / k;
            m2 += d * (z - mean);
        }
        let var = m2 / (n - 1) as f64;
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }
}
