//! Named, reproducible random streams.
//!
//! Each stochastic process owns a stream whose state is derived from
//! `(master seed, name)`. Two runs that share a master seed therefore see the
//! same draws on every stream regardless of how events interleave, which is
//! what couples sweep points (common random numbers).

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{param, Result};

/// Derives a 256-bit generator seed from a master seed and a label.
pub fn derive_seed(master_seed: u64, name: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(name.as_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    seed
}

/// Derives the master seed of replication `index` from the configured seed.
pub fn replication_seed(master_seed: u64, index: u32) -> u64 {
    let bytes = derive_seed(master_seed, &format!("replication-{index}"));
    u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone)]
pub struct RngStream {
    name: String,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, name: impl Into<String>) -> Self {
        let name = name.into();
        let rng = ChaCha8Rng::from_seed(derive_seed(master_seed, &name));
        Self { name, rng }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Exponential draw with mean `1 / rate`. Always strictly positive.
    pub fn sample_exponential(&mut self, rate: f64) -> Result<f64> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(param("rate", rate, "must be finite and > 0"));
        }
        let u: f64 = Open01.sample(&mut self.rng);
        Ok(-u.ln() / rate)
    }

    /// Returns `true` with probability `p`.
    pub fn sample_bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(param("p", p, "must lie in [0, 1]"));
        }
        Ok(self.uniform() < p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_mean() {
        let mut s = RngStream::new(7, "exp");
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = s.sample_exponential(2.0).unwrap();
            assert!(x > 0.0);
            sum += x;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean = {mean}");
    }

    #[test]
    fn bernoulli_fraction_and_edges() {
        let mut s = RngStream::new(7, "bern");
        let n = 1_000_000;
        let hits = (0..n).filter(|_| s.sample_bernoulli(0.5).unwrap()).count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.002, "fraction = {frac}");
        assert!((0..10_000).all(|_| s.sample_bernoulli(1.0).unwrap()));
        assert!((0..10_000).all(|_| !s.sample_bernoulli(0.0).unwrap()));
    }

    #[test]
    fn invalid_parameters() {
        let mut s = RngStream::new(1, "x");
        assert!(s.sample_exponential(0.0).is_err());
        assert!(s.sample_exponential(-1.0).is_err());
        assert!(s.sample_exponential(f64::NAN).is_err());
        assert!(s.sample_bernoulli(1.5).is_err());
        assert!(s.sample_bernoulli(-0.1).is_err());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, name| {
            let mut s = RngStream::new(seed, name);
            (0..16).map(|_| s.uniform()).collect::<Vec<_>>()
        };
        assert_eq!(draw(42, "bsm"), draw(42, "bsm"));
        assert_ne!(draw(42, "bsm"), draw(42, "requests"));
        assert_ne!(draw(42, "bsm"), draw(43, "bsm"));
    }

    #[test]
    fn replication_seeds_differ() {
        let seeds: Vec<_> = (0..100).map(|i| replication_seed(1, i)).collect();
        let mut dedup = seeds.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), seeds.len());
    }
}
