//! Leaf switch: Poisson ebit source, bounded memory with decoherence
//! deadlines, and first-come dispatch to requests.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::des::{EventHandle, Kernel, SimTime};
use crate::error::{param, Result};
use crate::metrics::{LeafCounters, QueueTracker};
use crate::physics::{self, DephasingModel};
use crate::rng::RngStream;
use crate::sim::Event;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EbitId(pub u64);

/// One stored Bell pair. Both halves are bookkept as a single record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ebit {
    pub id: EbitId,
    pub created_at: SimTime,
    pub expires_at: SimTime,
    renege: Option<EventHandle>,
}

impl Ebit {
    pub fn age(&self, now: SimTime) -> f64 {
        (now - self.created_at).max(0.0)
    }
}

/// What to do with a new ebit when memory is full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FullPolicy {
    #[default]
    BlockNew,
    DropOldest,
}

/// Which stored ebit serves the next request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PopPolicy {
    #[default]
    OldestFirst,
    YoungestFirst,
}

/// How the storage deadline is drawn. `Exponential` uses mean `T` and makes
/// the leaf a birth-death chain that the oracle solves exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenegeDist {
    #[default]
    Deterministic,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafConfig {
    pub lambda_gen: f64,
    pub capacity: usize,
    #[serde(default)]
    pub full_policy: FullPolicy,
    #[serde(default)]
    pub pop_policy: PopPolicy,
    #[serde(default)]
    pub renege_dist: RenegeDist,
}

impl LeafConfig {
    pub fn new(lambda_gen: f64, capacity: usize) -> Self {
        Self {
            lambda_gen,
            capacity,
            full_policy: FullPolicy::default(),
            pop_policy: PopPolicy::default(),
            renege_dist: RenegeDist::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_gen > 0.0 && self.lambda_gen.is_finite()) {
            return Err(param("lambda_gen", self.lambda_gen, "must be finite and > 0"));
        }
        if self.capacity < 1 {
            return Err(param("capacity", self.capacity as f64, "must be >= 1"));
        }
        Ok(())
    }
}

/// Bounded store of ebits ordered by creation time.
#[derive(Debug, Clone, Default)]
pub struct EbitMemory {
    capacity: usize,
    entries: VecDeque<Ebit>,
}

impl EbitMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Ebit> {
        self.entries.iter()
    }

    fn push(&mut self, ebit: Ebit) {
        debug_assert!(self.entries.len() < self.capacity);
        // Returned ebits may be older than the tail; keep creation order.
        let pos = self
            .entries
            .iter()
            .rposition(|e| e.created_at <= ebit.created_at)
            .map_or(0, |p| p + 1);
        self.entries.insert(pos, ebit);
    }

    fn pop(&mut self, policy: PopPolicy) -> Option<Ebit> {
        match policy {
            PopPolicy::OldestFirst => self.entries.pop_front(),
            PopPolicy::YoungestFirst => self.entries.pop_back(),
        }
    }

    fn remove(&mut self, id: EbitId) -> Option<Ebit> {
        let pos = self.entries.iter().position(|e| e.id == id)?;
        self.entries.remove(pos)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Admission {
    Admitted(EbitId),
    /// Memory was full under `BlockNew`; the new ebit is lost.
    Blocked,
    /// Memory was full under `DropOldest`; the oldest ebit was evicted.
    Displaced {
        admitted: EbitId,
        evicted: EbitId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntraOutcome {
    Delivered { fidelity: f64, wait: f64 },
    Unserved,
}

#[derive(Debug, Clone)]
pub struct LeafSwitch {
    id: usize,
    config: LeafConfig,
    dephasing: DephasingModel,
    renege_after: f64,
    memory: EbitMemory,
    next_ebit: u64,
    generation: RngStream,
    renege: RngStream,
    pub counters: LeafCounters,
    queue: QueueTracker,
}

impl LeafSwitch {
    pub fn new(id: usize, config: LeafConfig, dephasing: DephasingModel, master_seed: u64) -> Result<Self> {
        config.validate()?;
        let dephasing = DephasingModel::new(dephasing.gamma, dephasing.f_threshold)?;
        Ok(Self {
            id,
            config,
            dephasing,
            renege_after: dephasing.renege_time(),
            memory: EbitMemory::new(config.capacity),
            next_ebit: 0,
            generation: RngStream::new(master_seed, format!("ebit-arrivals-leaf-{id}")),
            renege: RngStream::new(master_seed, format!("renege-leaf-{id}")),
            counters: LeafCounters::default(),
            queue: QueueTracker::new(config.capacity),
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn config(&self) -> &LeafConfig {
        &self.config
    }

    pub fn gamma(&self) -> f64 {
        self.dephasing.gamma
    }

    /// Storage deadline `T` (infinite when the memory does not dephase).
    pub fn renege_after(&self) -> f64 {
        self.renege_after
    }

    pub fn memory(&self) -> &EbitMemory {
        &self.memory
    }

    pub fn queue(&self) -> &QueueTracker {
        &self.queue
    }

    /// Time until the next ebit generation.
    pub fn next_generation_delay(&mut self) -> f64 {
        self.generation
            .sample_exponential(self.config.lambda_gen)
            .expect("validated rate")
    }

    pub fn on_ebit_generated(&mut self, kernel: &mut Kernel<Event>, now: SimTime) -> Admission {
        self.counters.generated += 1;
        let mut evicted = None;
        if self.memory.is_full() {
            match self.config.full_policy {
                FullPolicy::BlockNew => {
                    self.counters.not_joined += 1;
                    return Admission::Blocked;
                }
                FullPolicy::DropOldest => {
                    self.queue.advance(now, self.memory.len());
                    let old = self.memory.pop(PopPolicy::OldestFirst).expect("full memory");
                    self.cancel_renege(kernel, &old);
                    self.counters.displaced += 1;
                    evicted = Some(old.id);
                }
            }
        }
        let id = EbitId(self.next_ebit);
        self.next_ebit += 1;
        let lifetime = match self.config.renege_dist {
            RenegeDist::Deterministic => self.renege_after,
            RenegeDist::Exponential if self.renege_after.is_infinite() => f64::INFINITY,
            RenegeDist::Exponential if self.renege_after == 0.0 => 0.0,
            RenegeDist::Exponential => self
                .renege
                .sample_exponential(1.0 / self.renege_after)
                .expect("positive rate"),
        };
        let expires_at = now + lifetime;
        let renege = self.schedule_renege(kernel, id, expires_at);
        self.queue.advance(now, self.memory.len());
        self.memory.push(Ebit {
            id,
            created_at: now,
            expires_at,
            renege,
        });
        self.counters.admitted += 1;
        match evicted {
            Some(evicted) => Admission::Displaced { admitted: id, evicted },
            None => Admission::Admitted(id),
        }
    }

    /// Removes an ebit whose deadline fired.
    pub fn on_renege(&mut self, ebit: EbitId, now: SimTime) -> Ebit {
        self.queue.advance(now, self.memory.len());
        let e = self
            .memory
            .remove(ebit)
            .expect("renege fired for an ebit that is no longer stored");
        self.counters.reneged += 1;
        e
    }

    /// Removes the next ebit according to the pop policy and revokes its
    /// deadline.
    pub fn pop_ebit(&mut self, kernel: &mut Kernel<Event>, now: SimTime) -> Option<Ebit> {
        self.queue.advance(now, self.memory.len());
        let e = self.memory.pop(self.config.pop_policy)?;
        self.cancel_renege(kernel, &e);
        Some(e)
    }

    /// Puts back an ebit that was popped but not consumed. Its original
    /// deadline is kept.
    pub fn return_ebit(&mut self, kernel: &mut Kernel<Event>, mut ebit: Ebit, now: SimTime) {
        self.queue.advance(now, self.memory.len());
        ebit.renege = self.schedule_renege(kernel, ebit.id, ebit.expires_at.max(now));
        self.memory.push(ebit);
    }

    /// Serves an intra-cluster request from this leaf's memory.
    pub fn serve_intra(&mut self, kernel: &mut Kernel<Event>, now: SimTime) -> IntraOutcome {
        match self.pop_ebit(kernel, now) {
            Some(e) => {
                let wait = e.age(now);
                let fidelity = physics::fidelity_at(wait, self.dephasing.gamma).expect("validated gamma");
                self.counters.delivered_intra += 1;
                IntraOutcome::Delivered { fidelity, wait }
            }
            None => IntraOutcome::Unserved,
        }
    }

    /// Restarts statistics at the warmup cut.
    pub fn reset_stats(&mut self, now: SimTime) {
        self.counters = LeafCounters {
            in_memory_initial: self.memory.len() as u64,
            ..LeafCounters::default()
        };
        self.queue.reset(now);
    }

    /// Closes the queue-length integral at the horizon.
    pub fn finalize(&mut self, now: SimTime) {
        self.queue.advance(now, self.memory.len());
        self.counters.in_memory_final = self.memory.len() as u64;
    }

    fn schedule_renege(&self, kernel: &mut Kernel<Event>, id: EbitId, at: SimTime) -> Option<EventHandle> {
        if at.is_finite() {
            Some(
                kernel
                    .schedule(
                        at,
                        Event::Renege {
                            leaf: self.id,
                            ebit: id,
                        },
                    )
                    .expect("deadline not in the past"),
            )
        } else {
            None
        }
    }

    fn cancel_renege(&self, kernel: &mut Kernel<Event>, e: &Ebit) {
        if let Some(h) = e.renege {
            let cancelled = kernel.cancel(h);
            debug_assert!(cancelled, "stored ebit had an already-fired deadline");
        }
    }
}
