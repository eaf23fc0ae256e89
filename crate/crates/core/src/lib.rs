//! Discrete-event simulation of spine-leaf quantum data center networks.
//!
//! Leaf switches generate Bell pairs (ebits) into a bounded memory where they
//! dephase and are dropped once their fidelity would fall below a target.
//! Requests between hosts on the same leaf consume one stored ebit; requests
//! across leaves consume one ebit from each leaf through a Bell-state
//! measurement at a spine switch, which may fail and retry.
//!
//! The crate also carries an exact birth-death solver for a single leaf
//! memory with exponential reneging, used to validate the simulator, and a
//! harness that expands parameter grids into replicated runs and CSV files.

pub mod config;
pub mod des;
pub mod error;
pub mod harness;
pub mod leaf;
pub mod metrics;
pub mod network;
pub mod oracle;
pub mod physics;
pub mod rng;
pub mod sim;
pub mod spine;

#[cfg(test)]
mod scenario_tests;

pub use config::{Gamma, ScenarioConfig, SweepAxis};
pub use des::{EventHandle, Kernel, SimTime};
pub use error::{Error, Result};
pub use leaf::{FullPolicy, LeafConfig, LeafSwitch, PopPolicy, RenegeDist};
pub use metrics::{FidelitySummary, RunRecord, RunStats, TraceRecord};
pub use network::{HostId, Request, RequestClass, Route, Topology, Workload};
pub use oracle::{BirthDeathChain, LeafMetrics, LeafQueue, ValidationReport};
pub use physics::{compose_swap_fidelity, fidelity_at, renege_time, BsmModel, DephasingModel};
pub use rng::RngStream;
pub use sim::{run_once, Simulation};
pub use spine::{SwapOutcome, SwapStation};
