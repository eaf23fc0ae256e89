//! Wires leaves, spines and the request source onto the event kernel.

use crate::config::ScenarioConfig;
use crate::des::Kernel;
use crate::error::Result;
use crate::leaf::{Admission, EbitId, IntraOutcome, LeafSwitch};
use crate::metrics::{FidelitySample, LeafStats, NetworkCounters, RunStats, TraceRecord};
use crate::network::{classify_route, RequestClass, RequestGenerator, Route, Source, SpinePicker, Topology};
use crate::physics::{BsmModel, DephasingModel};
use crate::rng::RngStream;
use crate::spine::{SwapOutcome, SwapStation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Generate { leaf: usize },
    Renege { leaf: usize, ebit: EbitId },
    Request(Source),
    WarmupCut,
}

struct World {
    topology: Topology,
    leaves: Vec<LeafSwitch>,
    spines: Vec<SwapStation>,
    requests: RequestGenerator,
    picker: SpinePicker,
    bsm: RngStream,
    network: NetworkCounters,
    fidelities: Vec<FidelitySample>,
    trace: Option<Vec<TraceRecord>>,
}

impl World {
    fn record(&mut self, r: TraceRecord) {
        if let Some(t) = &mut self.trace {
            t.push(r);
        }
    }

    fn handle(&mut self, k: &mut Kernel<Event>, ev: Event) {
        let now = k.now();
        match ev {
            Event::Generate { leaf } => {
                let outcome = self.leaves[leaf].on_ebit_generated(k, now);
                self.record(TraceRecord::Generated {
                    t: now,
                    leaf,
                    admitted: !matches!(outcome, Admission::Blocked),
                    displaced: matches!(outcome, Admission::Displaced { .. }),
                });
                let delay = self.leaves[leaf].next_generation_delay();
                k.schedule_in(delay, Event::Generate { leaf }).expect("future time");
            }
            Event::Renege { leaf, ebit } => {
                self.leaves[leaf].on_renege(ebit, now);
                self.record(TraceRecord::Reneged { t: now, leaf });
            }
            Event::Request(source) => {
                let req = self.requests.request(source, now);
                self.serve(k, req.class, &req);
                let delay = self.requests.interarrival(source);
                k.schedule_in(delay, Event::Request(source)).expect("future time");
            }
            Event::WarmupCut => {
                for l in &mut self.leaves {
                    l.reset_stats(now);
                }
                for s in &mut self.spines {
                    s.reset_stats();
                }
                self.network = NetworkCounters::default();
                self.fidelities.clear();
                self.record(TraceRecord::WarmupCut { t: now });
            }
        }
        debug_assert!(self.leaves.iter().all(|l| l.memory().len() <= l.memory().capacity()));
    }

    fn serve(&mut self, k: &mut Kernel<Event>, class: RequestClass, req: &crate::network::Request) {
        let now = k.now();
        self.network.requests_total += 1;
        self.record(TraceRecord::Request { t: now, class });
        let route = classify_route(&self.topology, req, &mut self.picker)
            .expect("configuration validated: inter-cluster demand has a spine");
        match route {
            Route::Intra { leaf } => {
                self.network.requests_intra += 1;
                match self.leaves[leaf].serve_intra(k, now) {
                    IntraOutcome::Delivered { fidelity, .. } => {
                        self.fidelities.push(FidelitySample {
                            class: RequestClass::Intra,
                            value: fidelity,
                        });
                        self.record(TraceRecord::DeliveredIntra { t: now, leaf, fidelity });
                    }
                    IntraOutcome::Unserved => {
                        self.network.unserved_intra += 1;
                        self.record(TraceRecord::Unserved { t: now, class });
                    }
                }
            }
            Route::Inter { leaf_a, spine, leaf_b } => {
                self.network.requests_inter += 1;
                let outcome = self.spines[spine].serve_inter(&mut self.leaves, leaf_a, leaf_b, k, &mut self.bsm, now);
                let attempts = outcome.attempts();
                if self.trace.is_some() {
                    let delivered = matches!(outcome, SwapOutcome::Delivered { .. });
                    for i in 0..attempts {
                        self.record(TraceRecord::SwapAttempt {
                            t: now,
                            spine,
                            leaf_a,
                            leaf_b,
                            success: delivered && i + 1 == attempts,
                        });
                    }
                }
                match outcome {
                    SwapOutcome::Delivered { fidelity, .. } => {
                        self.network.delivered_inter += 1;
                        self.fidelities.push(FidelitySample {
                            class: RequestClass::Inter,
                            value: fidelity,
                        });
                        self.record(TraceRecord::DeliveredInter { t: now, fidelity });
                    }
                    SwapOutcome::Unserved { .. } => {
                        self.network.unserved_inter += 1;
                        self.record(TraceRecord::Unserved { t: now, class });
                    }
                }
            }
        }
    }
}

/// A fully wired simulation run for one configuration and seed.
pub struct Simulation {
    kernel: Kernel<Event>,
    world: World,
    horizon: f64,
    warmup: f64,
    config: ScenarioConfig,
}

impl Simulation {
    /// Builds the run. `seed` is the master seed of this replication; every
    /// stochastic process draws from its own stream derived from it.
    pub fn new(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        let t = &config.topology;
        let topology = Topology::build(t.spines, t.leaves, t.hosts_per_leaf)?;
        let leaves = (0..t.leaves)
            .map(|i| {
                let dephasing = DephasingModel::new(config.physics.gamma.for_leaf(i), config.physics.f_threshold)?;
                LeafSwitch::new(i, config.leaf, dephasing, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        let bsm = BsmModel::new(config.physics.q_bsm)?;
        let spines = (0..t.spines).map(|i| SwapStation::new(i, bsm)).collect();
        let requests = RequestGenerator::new(&config.workload, &topology, seed)?;
        let picker = SpinePicker::new(t.spine_selection, RngStream::new(seed, "spine-pick"));
        let horizon = config.sim.horizon;
        let warmup = config.warmup();
        Ok(Self {
            kernel: Kernel::new(),
            world: World {
                topology,
                leaves,
                spines,
                requests,
                picker,
                bsm: RngStream::new(seed, "bsm"),
                network: NetworkCounters::default(),
                fidelities: Vec::new(),
                trace: None,
            },
            horizon,
            warmup,
            config: config.clone(),
        })
    }

    /// Records every state change for offline replay.
    pub fn with_trace(mut self) -> Self {
        self.world.trace = Some(Vec::new());
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Runs to the horizon and returns the statistics (and trace, if enabled).
    pub fn run(self) -> (RunStats, Option<Vec<TraceRecord>>) {
        let Simulation {
            mut kernel,
            mut world,
            horizon,
            warmup,
            config,
        } = self;
        // Scheduled first so it precedes anything else at the same instant.
        if warmup > 0.0 {
            kernel.schedule(warmup, Event::WarmupCut).expect("warmup >= 0");
        }
        for leaf in 0..world.leaves.len() {
            let delay = world.leaves[leaf].next_generation_delay();
            kernel.schedule(delay, Event::Generate { leaf }).expect("future time");
        }
        for source in world.requests.sources() {
            let delay = world.requests.interarrival(source);
            kernel.schedule(delay, Event::Request(source)).expect("future time");
        }
        kernel.run_until(horizon, |k, ev| world.handle(k, ev));
        for l in &mut world.leaves {
            l.finalize(horizon);
        }
        world.record(TraceRecord::End { t: horizon });
        let stats = RunStats {
            leaves: world
                .leaves
                .iter()
                .map(|l| LeafStats {
                    counters: l.counters,
                    occupancy: l.queue().occupancy().to_vec(),
                })
                .collect(),
            spines: world.spines.iter().map(|s| s.counters).collect(),
            network: world.network,
            fidelities: world.fidelities,
            horizon,
            warmup,
            events: kernel.executed(),
            renege_dist: config.leaf.renege_dist,
        };
        (stats, world.trace)
    }
}

/// Convenience wrapper: build and run without tracing.
pub fn run_once(config: &ScenarioConfig, seed: u64) -> Result<RunStats> {
    Ok(Simulation::new(config, seed)?.run().0)
}
