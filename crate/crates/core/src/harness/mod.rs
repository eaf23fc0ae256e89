//! Replications, sweeps and oracle validation on top of [`crate::sim`].

mod presets;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use presets::{preset, preset_names, PRESETS};

use crate::config::{ConfigError, ScenarioConfig};
use crate::metrics::{self, RunRecord, RunStats};
use crate::oracle::{self, LeafMetrics, LeafQueue, ValidationReport};
use crate::physics;
use crate::rng::replication_seed;
use crate::sim::run_once;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] crate::error::Error),
    #[error("{0}")]
    NotValidatable(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

/// Runs every sweep point and replication. Points and replications execute
/// in parallel; replication `r` of every point uses the same seed, so points
/// share their random streams. Records come back sorted by
/// `(point, replication)`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Vec<RunRecord>, HarnessError> {
    config.validate()?;
    let points = config.expand()?;
    let jobs: Vec<(usize, u32)> = (0..points.len())
        .flat_map(|p| (0..config.sim.replications).map(move |r| (p, r)))
        .collect();
    let mut records = jobs
        .par_iter()
        .map(|&(p, r)| {
            let seed = replication_seed(config.sim.master_seed, r);
            let cfg = &points[p];
            run_once(cfg, seed).map(|stats| RunRecord {
                point: p,
                replication: r,
                seed,
                params: cfg.param_columns(),
                stats,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by_key(|r| (r.point, r.replication));
    Ok(records)
}

/// Writes `<stem>.csv` (one row per run) and `<stem>_summary.csv` (mean and
/// standard error per point) into `dir`.
pub fn write_outputs(records: &[RunRecord], dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let runs = dir.join(format!("{stem}.csv"));
    let summary = dir.join(format!("{stem}_summary.csv"));
    let open = |path: &Path| {
        std::fs::File::create(path)
            .map(std::io::BufWriter::new)
            .map_err(|source| HarnessError::Io {
                path: path.to_path_buf(),
                source,
            })
    };
    metrics::write_csv(records, open(&runs)?)?;
    metrics::write_summary_csv(records, open(&summary)?)?;
    Ok((runs, summary))
}

/// Birth-death parameters matching a single-leaf exponential-reneging config.
pub fn oracle_queue(config: &ScenarioConfig) -> Result<LeafQueue, HarnessError> {
    config.validate()?;
    config.validatable().map_err(HarnessError::NotValidatable)?;
    let gamma = config.physics.gamma.for_leaf(0);
    let t = physics::renege_time(config.physics.f_threshold, gamma)?;
    if t == 0.0 {
        return Err(HarnessError::NotValidatable(
            "zero storage deadline (f_threshold = 1) has no finite renege rate".into(),
        ));
    }
    let topology = crate::network::Topology::build(0, 1, config.topology.hosts_per_leaf)?;
    Ok(LeafQueue {
        lambda: config.leaf.lambda_gen,
        mu: config.workload.total_rate(&topology),
        theta: if t.is_infinite() { 0.0 } else { 1.0 / t },
        capacity: config.leaf.capacity,
    })
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub queue: LeafQueue,
    pub oracle: LeafMetrics,
    pub stats: RunStats,
    pub report: ValidationReport,
}

/// Runs the simulation and the exact oracle on matched parameters. With
/// `target_events`, the horizon is chosen so the run executes about that many
/// events.
pub fn validate(
    config: &ScenarioConfig,
    tolerance: f64,
    target_events: Option<u64>,
) -> Result<Validation, HarnessError> {
    let queue = oracle_queue(config)?;
    let oracle_metrics = queue.metrics()?;
    let mut cfg = config.clone();
    cfg.sweep.clear();
    if let Some(n) = target_events {
        cfg.sim.horizon = n as f64 / oracle_metrics.event_rate;
    }
    let stats = run_once(&cfg, replication_seed(cfg.sim.master_seed, 0))?;
    let report = oracle::compare(&oracle_metrics, &stats, tolerance)?;
    Ok(Validation {
        queue,
        oracle: oracle_metrics,
        stats,
        report,
    })
}
