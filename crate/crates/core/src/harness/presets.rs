//! Built-in scenarios mirroring the published experiment grids.
//!
//! Rates in the network-scale presets are expressed in units of the per-leaf
//! generation rate (generation = 1.0).

use crate::config::{Gamma, PhysicsConfig, ScenarioConfig, SimConfig, SweepAxis, TopologyConfig};
use crate::leaf::{LeafConfig, RenegeDist};
use crate::network::{SpineSelection, Workload};

pub const PRESETS: &[(&str, &str)] = &[
    (
        "fig6-leaf",
        "single leaf, 3 hosts, generation 30: metrics vs dephasing for K in {10,15,20}, per-pair rate in {1,1.5,2}",
    ),
    (
        "fig7-spine",
        "1 spine, 2 leaves, 3 hosts/leaf, 40% inter demand: assembly rate vs BSM success, per-pair demand in {0.5,1,1.5} (15 pairs)",
    ),
    (
        "fig7-spine-aggregate",
        "as fig7-spine with the demand read as the network-wide rate (memories stay saturated)",
    ),
    (
        "fig8-fidelity",
        "15 leaves, generation 1/leaf: fidelity and capacity vs dephasing for K from 10 to 90 and F in {0.6,0.7,0.8}",
    ),
    (
        "fig9-service",
        "15 leaves, generation 1/leaf: delivered fidelity vs aggregate service rate",
    ),
    (
        "fig11-capacity",
        "15 leaves, generation 1/leaf: capacity vs aggregate demand 1-30 for dephasing in {0,0.2,0.5}",
    ),
    (
        "validate-small",
        "single leaf, exponential reneging off: lambda=2, mu=1, K=2 (hand-solvable chain)",
    ),
    (
        "validate-paper",
        "single leaf, exponential reneging: lambda=30, K=15, mu=4.5, gamma=0.06, F=0.7",
    ),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

fn axis(field: &str, values: &[f64]) -> SweepAxis {
    SweepAxis {
        field: field.to_string(),
        values: values.to_vec(),
    }
}

fn base(name: &str, spines: usize, leaves: usize, hosts: usize, lambda: f64, capacity: usize) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        topology: TopologyConfig {
            spines,
            leaves,
            hosts_per_leaf: hosts,
            spine_selection: SpineSelection::Uniform,
        },
        physics: PhysicsConfig {
            gamma: Gamma::Uniform(0.05),
            f_threshold: 0.7,
            q_bsm: 1.0,
        },
        leaf: LeafConfig::new(lambda, capacity),
        workload: Workload::PerPair { mu_pair: 1.0 },
        sim: SimConfig {
            master_seed: 2024,
            ..SimConfig::default()
        },
        sweep: Vec::new(),
    }
}

fn spine_grid(name: &str, demand: &[f64]) -> ScenarioConfig {
    let mut c = base(name, 1, 2, 3, 30.0, 10);
    c.workload = Workload::Aggregate {
        mu_total: demand[0],
        p_inter: Some(0.4),
    };
    c.physics.q_bsm = 0.5;
    c.sim.replications = 3;
    c.sweep = vec![
        axis("leaf.capacity", &[10.0, 15.0, 20.0]),
        axis("physics.q_bsm", &[0.9, 0.7, 0.5, 0.3]),
        axis("workload.mu_total", demand),
        axis("physics.gamma", &[0.02, 0.06, 0.1]),
    ];
    c
}

/// Returns the named preset, or `None` if the name is unknown.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let cfg = match name {
        "fig6-leaf" => {
            let mut c = base(name, 0, 1, 3, 30.0, 10);
            c.sim.replications = 5;
            c.sweep = vec![
                axis("leaf.capacity", &[10.0, 15.0, 20.0]),
                axis("workload.mu_pair", &[1.0, 1.5, 2.0]),
                axis("physics.gamma", &[0.02, 0.04, 0.06, 0.08, 0.1]),
            ];
            c
        }
        "fig7-spine" => spine_grid(name, &[7.5, 15.0, 22.5]),
        "fig7-spine-aggregate" => spine_grid(name, &[0.5, 1.0, 1.5]),
        "fig8-fidelity" => {
            let mut c = base(name, 2, 15, 4, 1.0, 10);
            c.workload = Workload::Aggregate {
                mu_total: 15.0,
                p_inter: Some(0.0),
            };
            c.sim.replications = 2;
            c.sweep = vec![
                axis("physics.f_threshold", &[0.6, 0.7, 0.8]),
                axis("physics.gamma", &[0.1, 0.2, 0.5]),
                axis("leaf.capacity", &[10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0]),
            ];
            c
        }
        "fig9-service" => {
            let mut c = base(name, 2, 15, 4, 1.0, 10);
            c.physics.gamma = Gamma::Uniform(0.2);
            c.workload = Workload::Aggregate {
                mu_total: 15.0,
                p_inter: Some(0.0),
            };
            c.sim.replications = 2;
            c.sweep = vec![
                axis("physics.f_threshold", &[0.6, 0.7, 0.8]),
                axis("workload.mu_total", &[1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0]),
            ];
            c
        }
        "fig11-capacity" => {
            let mut c = base(name, 2, 15, 4, 1.0, 50);
            c.workload = Workload::Aggregate {
                mu_total: 1.0,
                p_inter: Some(0.0),
            };
            c.sim.replications = 3;
            let demand: Vec<f64> = (1..=30).map(f64::from).collect();
            c.sweep = vec![
                axis("physics.gamma", &[0.0, 0.2, 0.5]),
                axis("workload.mu_total", &demand),
            ];
            c
        }
        "validate-small" => {
            let mut c = base(name, 0, 1, 2, 2.0, 2);
            c.physics.gamma = Gamma::Uniform(0.0);
            c.leaf.renege_dist = RenegeDist::Exponential;
            c.workload = Workload::Aggregate {
                mu_total: 1.0,
                p_inter: None,
            };
            c
        }
        "validate-paper" => {
            let mut c = base(name, 0, 1, 3, 30.0, 15);
            c.physics.gamma = Gamma::Uniform(0.06);
            c.leaf.renege_dist = RenegeDist::Exponential;
            c.workload = Workload::PerPair { mu_pair: 1.5 };
            c
        }
        _ => return None,
    };
    Some(cfg)
}
