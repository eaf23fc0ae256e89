//! Scenario configuration (TOML).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::leaf::{LeafConfig, RenegeDist};
use crate::metrics::ParamColumns;
use crate::network::{SpineSelection, Topology, Workload};
use crate::physics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub spines: usize,
    pub leaves: usize,
    pub hosts_per_leaf: usize,
    #[serde(default)]
    pub spine_selection: SpineSelection,
}

/// A single dephasing rate shared by all leaves, or one per leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Uniform(f64),
    PerLeaf(Vec<f64>),
}

impl Gamma {
    pub fn for_leaf(&self, leaf: usize) -> f64 {
        match self {
            Gamma::Uniform(g) => *g,
            Gamma::PerLeaf(gs) => gs[leaf],
        }
    }

    fn label(&self) -> String {
        match self {
            Gamma::Uniform(g) => format!("{g}"),
            Gamma::PerLeaf(gs) => gs.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(";"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub gamma: Gamma,
    pub f_threshold: f64,
    #[serde(default = "default_q_bsm")]
    pub q_bsm: f64,
}

fn default_q_bsm() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_warmup_fraction")]
    pub warmup_fraction: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_max_sweep_points")]
    pub max_sweep_points: usize,
}

fn default_horizon() -> f64 {
    1e4
}
fn default_warmup_fraction() -> f64 {
    0.1
}
fn default_replications() -> u32 {
    1
}
fn default_max_sweep_points() -> usize {
    10_000
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            warmup_fraction: default_warmup_fraction(),
            master_seed: 0,
            replications: default_replications(),
            max_sweep_points: default_max_sweep_points(),
        }
    }
}

/// One swept parameter: a dotted field path and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub field: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub topology: TopologyConfig,
    pub physics: PhysicsConfig,
    pub leaf: LeafConfig,
    pub workload: Workload,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize configuration: {0}")]
    Serialize(#[from] toml::ser::Error),
}

/// Fields that a sweep axis may vary.
pub const SWEEPABLE: &[&str] = &[
    "topology.spines",
    "topology.leaves",
    "topology.hosts_per_leaf",
    "physics.gamma",
    "physics.f_threshold",
    "physics.q_bsm",
    "leaf.lambda_gen",
    "leaf.capacity",
    "workload.mu_pair",
    "workload.mu_total",
    "workload.p_inter",
    "sim.horizon",
    "sim.warmup_fraction",
];

fn as_count(field: &str, v: f64) -> Result<usize, String> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e12 {
        Ok(v as usize)
    } else {
        Err(format!("{field}: {v} is not a non-negative integer"))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn warmup(&self) -> f64 {
        self.sim.horizon * self.sim.warmup_fraction
    }

    /// Validates every field and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let t = &self.topology;
        if t.leaves < 1 {
            errs.push("topology.leaves: must be >= 1".to_string());
        }
        if t.hosts_per_leaf < 2 {
            errs.push("topology.hosts_per_leaf: must be >= 2".to_string());
        }
        match &self.physics.gamma {
            Gamma::Uniform(g) => {
                if !(*g >= 0.0 && g.is_finite()) {
                    errs.push(format!("physics.gamma: {g} must be finite and >= 0"));
                }
            }
            Gamma::PerLeaf(gs) => {
                if gs.len() != t.leaves {
                    errs.push(format!(
                        "physics.gamma: {} per-leaf values for {} leaves",
                        gs.len(),
                        t.leaves
                    ));
                }
                if gs.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                    errs.push("physics.gamma: every value must be finite and >= 0".to_string());
                }
            }
        }
        if physics::renege_time(self.physics.f_threshold, 0.0).is_err() {
            errs.push(format!(
                "physics.f_threshold: {} must lie in (0.5, 1]",
                self.physics.f_threshold
            ));
        }
        if !(0.0..=1.0).contains(&self.physics.q_bsm) {
            errs.push(format!("physics.q_bsm: {} must lie in [0, 1]", self.physics.q_bsm));
        }
        if !(self.leaf.lambda_gen > 0.0 && self.leaf.lambda_gen.is_finite()) {
            errs.push(format!(
                "leaf.lambda_gen: {} must be finite and > 0",
                self.leaf.lambda_gen
            ));
        }
        if self.leaf.capacity < 1 {
            errs.push("leaf.capacity: must be >= 1".to_string());
        }
        if t.leaves >= 1 && t.hosts_per_leaf >= 2 {
            if let Ok(topo) = Topology::build(t.spines, t.leaves, t.hosts_per_leaf) {
                if let Err(e) = self.workload.validate(&topo) {
                    errs.push(format!("workload: {e}"));
                }
                let can_be_inter = match self.workload {
                    Workload::PerPair { .. } => !topo.inter_pairs().is_empty(),
                    Workload::Aggregate { p_inter, .. } => p_inter.map_or(!topo.inter_pairs().is_empty(), |p| p > 0.0),
                };
                if can_be_inter && t.spines == 0 {
                    errs.push("topology.spines: inter-cluster demand requires at least one spine".to_string());
                }
            }
        }
        let s = &self.sim;
        if !(s.horizon > 0.0 && s.horizon.is_finite()) {
            errs.push(format!("sim.horizon: {} must be finite and > 0", s.horizon));
        }
        if !(0.0..1.0).contains(&s.warmup_fraction) {
            errs.push(format!("sim.warmup_fraction: {} must lie in [0, 1)", s.warmup_fraction));
        }
        if s.replications < 1 {
            errs.push("sim.replications: must be >= 1".to_string());
        }
        for axis in &self.sweep {
            if !SWEEPABLE.contains(&axis.field.as_str()) {
                errs.push(format!("sweep: unknown field `{}`", axis.field));
            } else if axis.values.is_empty() {
                errs.push(format!("sweep: `{}` has no values", axis.field));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// Sets a sweepable field.
    pub fn set_field(&mut self, field: &str, value: f64) -> Result<(), String> {
        match field {
            "topology.spines" => self.topology.spines = as_count(field, value)?,
            "topology.leaves" => self.topology.leaves = as_count(field, value)?,
            "topology.hosts_per_leaf" => self.topology.hosts_per_leaf = as_count(field, value)?,
            "physics.gamma" => self.physics.gamma = Gamma::Uniform(value),
            "physics.f_threshold" => self.physics.f_threshold = value,
            "physics.q_bsm" => self.physics.q_bsm = value,
            "leaf.lambda_gen" => self.leaf.lambda_gen = value,
            "leaf.capacity" => self.leaf.capacity = as_count(field, value)?,
            "workload.mu_pair" => match &mut self.workload {
                Workload::PerPair { mu_pair } => *mu_pair = value,
                Workload::Aggregate { .. } => return Err(format!("{field}: workload is aggregate")),
            },
            "workload.mu_total" => match &mut self.workload {
                Workload::Aggregate { mu_total, .. } => *mu_total = value,
                Workload::PerPair { .. } => return Err(format!("{field}: workload is per-pair")),
            },
            "workload.p_inter" => match &mut self.workload {
                Workload::Aggregate { p_inter, .. } => *p_inter = Some(value),
                Workload::PerPair { .. } => return Err(format!("{field}: workload is per-pair")),
            },
            "sim.horizon" => self.sim.horizon = value,
            "sim.warmup_fraction" => self.sim.warmup_fraction = value,
            other => return Err(format!("unknown sweep field `{other}`")),
        }
        Ok(())
    }

    /// Number of points in the Cartesian product of the sweep axes.
    pub fn grid_size(&self) -> usize {
        self.sweep.iter().map(|a| a.values.len()).product()
    }

    /// Expands the sweep grid. The last axis varies fastest. Without axes the
    /// result is the configuration itself.
    pub fn expand(&self) -> Result<Vec<ScenarioConfig>, ConfigError> {
        let size = self.grid_size();
        if size > self.sim.max_sweep_points {
            return Err(ConfigError::Invalid(vec![format!(
                "sweep: {size} grid points exceed the cap of {}",
                self.sim.max_sweep_points
            )]));
        }
        let mut base = self.clone();
        base.sweep.clear();
        let mut out = Vec::with_capacity(size);
        for idx in 0..size {
            let mut cfg = base.clone();
            let mut rem = idx;
            let mut errs = Vec::new();
            let mut coords = vec![0; self.sweep.len()];
            for (i, axis) in self.sweep.iter().enumerate().rev() {
                coords[i] = rem % axis.values.len();
                rem /= axis.values.len();
            }
            for (axis, &c) in self.sweep.iter().zip(&coords) {
                if let Err(e) = cfg.set_field(&axis.field, axis.values[c]) {
                    errs.push(e);
                }
            }
            if !errs.is_empty() {
                return Err(ConfigError::Invalid(errs));
            }
            cfg.validate()?;
            out.push(cfg);
        }
        Ok(out)
    }

    pub fn param_columns(&self) -> ParamColumns {
        let (mode, mu_pair, mu_total, p_inter) = match self.workload {
            Workload::PerPair { mu_pair } => ("per-pair", Some(mu_pair), None, None),
            Workload::Aggregate { mu_total, p_inter } => ("aggregate", None, Some(mu_total), p_inter),
        };
        let demand_rate = Topology::build(self.topology.spines, self.topology.leaves, self.topology.hosts_per_leaf)
            .map(|t| self.workload.total_rate(&t))
            .unwrap_or(f64::NAN);
        ParamColumns {
            scenario: self.name.clone(),
            spines: self.topology.spines,
            leaves: self.topology.leaves,
            hosts_per_leaf: self.topology.hosts_per_leaf,
            spine_selection: kebab(&self.topology.spine_selection),
            gamma: self.physics.gamma.label(),
            f_threshold: self.physics.f_threshold,
            q_bsm: self.physics.q_bsm,
            lambda_gen: self.leaf.lambda_gen,
            capacity: self.leaf.capacity,
            full_policy: kebab(&self.leaf.full_policy),
            pop_policy: kebab(&self.leaf.pop_policy),
            renege_dist: kebab(&self.leaf.renege_dist),
            workload_mode: mode.to_string(),
            mu_pair,
            mu_total,
            p_inter,
            demand_rate,
            horizon: self.sim.horizon,
            warmup: self.warmup(),
        }
    }

    /// Whether the run can be checked against the birth-death oracle.
    pub fn validatable(&self) -> Result<(), String> {
        if self.topology.leaves != 1 {
            return Err(format!("oracle models one leaf, config has {}", self.topology.leaves));
        }
        if self.leaf.renege_dist != RenegeDist::Exponential {
            return Err("oracle is exact only for exponential reneging; set leaf.renege_dist = \"exponential\"".into());
        }
        if self.leaf.full_policy != crate::leaf::FullPolicy::BlockNew {
            return Err("oracle assumes the block-new full-memory policy".into());
        }
        Ok(())
    }
}

fn kebab<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}
