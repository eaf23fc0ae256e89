//! Exact steady state of the leaf memory as a finite birth-death chain.
//!
//! State `n` is the number of stored ebits. Births are ebit generations
//! (rate `lambda` while `n < K`); deaths are request consumptions (aggregate
//! rate `mu` whenever `n >= 1`) plus per-ebit exponential reneging
//! (`n * theta`). Exact only when reneging is exponential.

use crate::error::{param, Error, Result};
use crate::leaf::RenegeDist;
use crate::metrics::RunStats;

#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathChain {
    birth: Vec<f64>,
    death: Vec<f64>,
}

impl BirthDeathChain {
    /// Builds a chain on states `0..=K` from explicit rates. `birth[K]` and
    /// `death[0]` are ignored.
    pub fn new(birth: Vec<f64>, death: Vec<f64>) -> Result<Self> {
        if birth.len() != death.len() || birth.is_empty() {
            return Err(Error::NoStationary(
                "birth and death vectors must have equal, non-zero length".into(),
            ));
        }
        for &r in birth.iter().chain(&death) {
            if !r.is_finite() || r < 0.0 {
                return Err(param("rate", r, "transition rates must be finite and >= 0"));
            }
        }
        Ok(Self { birth, death })
    }

    /// Leaf memory chain: generation `lambda`, consumption `mu`, per-ebit
    /// renege rate `theta`, capacity `k`.
    pub fn leaf_queue(lambda: f64, mu: f64, theta: f64, k: usize) -> Result<Self> {
        if k < 1 {
            return Err(param("capacity", k as f64, "must be >= 1"));
        }
        let birth = (0..=k).map(|n| if n < k { lambda } else { 0.0 }).collect();
        let death = (0..=k)
            .map(|n| if n >= 1 { mu + n as f64 * theta } else { 0.0 })
            .collect();
        Self::new(birth, death)
    }

    pub fn capacity(&self) -> usize {
        self.birth.len() - 1
    }

    pub fn birth(&self) -> &[f64] {
        &self.birth
    }

    pub fn death(&self) -> &[f64] {
        &self.death
    }

    /// `pi_n = pi_0 * prod_{i<n} birth[i] / death[i+1]`, normalised. Products
    /// are accumulated in log space so K in the hundreds does not underflow.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        let k = self.capacity();
        let mut log_w = Vec::with_capacity(k + 1);
        log_w.push(0.0f64);
        for n in 1..=k {
            let prev = log_w[n - 1];
            let b = self.birth[n - 1];
            let d = self.death[n];
            let next = if prev == f64::NEG_INFINITY || b == 0.0 {
                f64::NEG_INFINITY
            } else if d == 0.0 {
                return Err(Error::NoStationary(format!(
                    "state {n} is reachable but has zero death rate"
                )));
            } else {
                prev + b.ln() - d.ln()
            };
            log_w.push(next);
        }
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        Ok(weights.into_iter().map(|w| w / total).collect())
    }
}

/// Steady-state observables of the leaf memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafMetrics {
    pub p_empty: f64,
    pub p_full: f64,
    pub mean_queue: f64,
    pub throughput: f64,
    pub renege_rate: f64,
    /// Fraction of generated ebits that find the memory full (PASTA).
    pub blocking: f64,
    /// Total event rate: generations, requests and reneges.
    pub event_rate: f64,
}

/// Parameters of a leaf-queue oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafQueue {
    pub lambda: f64,
    pub mu: f64,
    pub theta: f64,
    pub capacity: usize,
}

impl LeafQueue {
    pub fn chain(&self) -> Result<BirthDeathChain> {
        BirthDeathChain::leaf_queue(self.lambda, self.mu, self.theta, self.capacity)
    }

    pub fn metrics(&self) -> Result<LeafMetrics> {
        let pi = self.chain()?.stationary_distribution()?;
        let k = self.capacity;
        let mean_queue: f64 = pi.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        let throughput = (1.0 - pi[0]) * self.mu;
        let renege_rate = self.theta * mean_queue;
        Ok(LeafMetrics {
            p_empty: pi[0],
            p_full: pi[k],
            mean_queue,
            throughput,
            renege_rate,
            blocking: pi[k],
            event_rate: self.lambda + self.mu + renege_rate,
        })
    }
}

/// Relative-error denominators are floored here so that metrics whose exact
/// value is vanishingly small (P0 of a saturated memory is ~1e-19) are judged
/// on absolute deviation instead.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricComparison {
    pub name: &'static str,
    pub oracle: f64,
    pub simulated: f64,
    pub relative_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub rows: Vec<MetricComparison>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.rows.iter().filter(|r| !r.pass).map(|r| r.name).collect()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<14} {:>14} {:>14} {:>10}  result",
            "metric", "oracle", "simulated", "rel.err"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<14} {:>14.6} {:>14.6} {:>9.3}%  {}",
                r.name,
                r.oracle,
                r.simulated,
                100.0 * r.relative_error,
                if r.pass { "PASS" } else { "FAIL" }
            )?;
        }
        write!(f, "tolerance {:.2}%", 100.0 * self.tolerance)
    }
}

pub fn relative_error(oracle: f64, simulated: f64) -> f64 {
    (simulated - oracle).abs() / oracle.abs().max(RELATIVE_ERROR_FLOOR)
}

/// Compares oracle steady state against a single-leaf simulation run in
/// exponential-reneging mode.
pub fn compare(oracle: &LeafMetrics, stats: &RunStats, tolerance: f64) -> Result<ValidationReport> {
    if stats.renege_dist != RenegeDist::Exponential {
        return Err(Error::NotValidatable(
            "the oracle is exact only for exponential reneging; rerun with renege_dist = \"exponential\"".into(),
        ));
    }
    if stats.leaves.len() != 1 {
        return Err(Error::NotValidatable(format!(
            "the oracle models a single leaf, run has {}",
            stats.leaves.len()
        )));
    }
    let rows = [
        ("p_empty", oracle.p_empty, stats.p_empty()),
        ("p_full", oracle.p_full, stats.p_full()),
        ("blocking", oracle.blocking, stats.not_joined_ratio().unwrap_or(0.0)),
        ("mean_queue", oracle.mean_queue, stats.avg_queue_len()),
        ("throughput", oracle.throughput, stats.throughput()),
        ("renege_rate", oracle.renege_rate, stats.renege_rate()),
    ]
    .into_iter()
    .map(|(name, o, s)| {
        let relative_error = relative_error(o, s);
        MetricComparison {
            name,
            oracle: o,
            simulated: s,
            relative_error,
            pass: relative_error <= tolerance,
        }
    })
    .collect();
    Ok(ValidationReport { tolerance, rows })
}
