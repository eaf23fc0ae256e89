//! Spine switch modelled as a two-input assembly station.
//!
//! Each BSM attempt consumes one ebit from each of the two leaves. A failed
//! attempt discards both and immediately retries with the next pair, until a
//! swap succeeds or one side runs dry. Retries take no simulated time.

use crate::des::{Kernel, SimTime};
use crate::leaf::LeafSwitch;
use crate::physics::{self, BsmModel};
use crate::rng::RngStream;
use crate::sim::Event;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptySide {
    A,
    B,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwapOutcome {
    Delivered {
        fidelity: f64,
        attempts: u32,
    },
    Unserved {
        reason: EmptySide,
        attempts: u32,
        /// 1 if a lone popped ebit was put back into its memory.
        returned: u32,
    },
}

impl SwapOutcome {
    pub fn attempts(&self) -> u32 {
        match *self {
            SwapOutcome::Delivered { attempts, .. } | SwapOutcome::Unserved { attempts, .. } => attempts,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SwapCounters {
    pub swap_attempts: u64,
    pub swap_failures: u64,
    pub swap_successes: u64,
}

#[derive(Debug, Clone)]
pub struct SwapStation {
    id: usize,
    bsm: BsmModel,
    pub counters: SwapCounters,
}

impl SwapStation {
    pub fn new(id: usize, bsm: BsmModel) -> Self {
        Self {
            id,
            bsm,
            counters: SwapCounters::default(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn bsm(&self) -> BsmModel {
        self.bsm
    }

    pub fn reset_stats(&mut self) {
        self.counters = SwapCounters::default();
    }

    /// Serves one inter-cluster request between `leaf_a` and `leaf_b`.
    pub fn serve_inter(
        &mut self,
        leaves: &mut [LeafSwitch],
        leaf_a: usize,
        leaf_b: usize,
        kernel: &mut Kernel<Event>,
        bsm_stream: &mut RngStream,
        now: SimTime,
    ) -> SwapOutcome {
        assert_ne!(leaf_a, leaf_b, "inter-cluster swap needs two distinct leaves");
        let mut attempts = 0;
        loop {
            let a = leaves[leaf_a].pop_ebit(kernel, now);
            let b = leaves[leaf_b].pop_ebit(kernel, now);
            let (ea, eb) = match (a, b) {
                (Some(ea), Some(eb)) => (ea, eb),
                (Some(ea), None) => {
                    leaves[leaf_a].return_ebit(kernel, ea, now);
                    return SwapOutcome::Unserved {
                        reason: EmptySide::B,
                        attempts,
                        returned: 1,
                    };
                }
                (None, Some(eb)) => {
                    leaves[leaf_b].return_ebit(kernel, eb, now);
                    return SwapOutcome::Unserved {
                        reason: EmptySide::A,
                        attempts,
                        returned: 1,
                    };
                }
                (None, None) => {
                    return SwapOutcome::Unserved {
                        reason: EmptySide::Both,
                        attempts,
                        returned: 0,
                    };
                }
            };
            attempts += 1;
            self.counters.swap_attempts += 1;
            leaves[leaf_a].counters.sent_to_swap += 1;
            leaves[leaf_b].counters.sent_to_swap += 1;
            let success = bsm_stream
                .sample_bernoulli(self.bsm.q_success)
                .expect("validated probability");
            if success {
                self.counters.swap_successes += 1;
                let fidelity = physics::compose_swap_fidelity_with(
                    ea.age(now),
                    leaves[leaf_a].gamma(),
                    eb.age(now),
                    leaves[leaf_b].gamma(),
                )
                .expect("validated inputs");
                return SwapOutcome::Delivered { fidelity, attempts };
            }
            self.counters.swap_failures += 1;
        }
    }
}
