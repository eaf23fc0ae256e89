//! Deterministic discrete-event kernel.
//!
//! Events are ordered by `(fire_time, insertion sequence)`, so events that
//! share a timestamp fire in the order they were scheduled. Cancellation is
//! O(1): a cancelled entry stays in the heap and is skipped when popped.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};

/// Simulation time in dimensionless units.
pub type SimTime = f64;

/// Identifies a scheduled event. Returned by [`Kernel::schedule`] and
/// accepted by [`Kernel::cancel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle {
    id: u64,
    fire_time_bits: u64,
}

impl EventHandle {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn fire_time(&self) -> SimTime {
        f64::from_bits(self.fire_time_bits)
    }
}

struct Entry<E> {
    time: SimTime,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // Reversed: BinaryHeap is a max-heap and we want the earliest entry on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Future-event list plus virtual clock.
pub struct Kernel<E> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Entry<E>>,
    pending: HashSet<u64>,
    executed: u64,
}

impl<E> Default for Kernel<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Kernel<E> {
    pub fn new() -> Self {
        Self {
            now: 0.0,
            next_seq: 0,
            heap: BinaryHeap::new(),
            pending: HashSet::new(),
            executed: 0,
        }
    }

    /// Current simulation time.
    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of events executed so far.
    pub fn executed(&self) -> u64 {
        self.executed
    }

    /// Number of scheduled events that have neither fired nor been cancelled.
    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Schedules `event` to fire at absolute time `time`.
    pub fn schedule(&mut self, time: SimTime, event: E) -> Result<EventHandle> {
        if time.is_nan() || time < self.now {
            return Err(Error::ScheduleInPast { time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.insert(seq);
        self.heap.push(Entry { time, seq, event });
        Ok(EventHandle {
            id: seq,
            fire_time_bits: time.to_bits(),
        })
    }

    /// Schedules `event` at `now + delay`.
    pub fn schedule_in(&mut self, delay: SimTime, event: E) -> Result<EventHandle> {
        self.schedule(self.now + delay, event)
    }

    /// Returns `true` iff the event had not fired yet and now never will.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.pending.remove(&handle.id)
    }

    /// Pops the next live event with `fire_time <= t_end`, advancing the clock
    /// to its fire time.
    pub fn next_event(&mut self, t_end: SimTime) -> Option<(EventHandle, E)> {
        loop {
            let top = self.heap.peek()?;
            if top.time > t_end {
                return None;
            }
            let entry = self.heap.pop().expect("peeked entry");
            if !self.pending.remove(&entry.seq) {
                continue;
            }
            debug_assert!(entry.time >= self.now);
            self.now = entry.time;
            self.executed += 1;
            return Some((
                EventHandle {
                    id: entry.seq,
                    fire_time_bits: entry.time.to_bits(),
                },
                entry.event,
            ));
        }
    }

    /// Executes every event with `fire_time <= t_end` in timestamp order and
    /// leaves the clock at `t_end`. The handler may schedule and cancel
    /// further events through the kernel reference it receives.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, E),
    {
        let mut count = 0;
        while let Some((_, event)) = self.next_event(t_end) {
            handler(self, event);
            count += 1;
        }
        if t_end > self.now {
            self.now = t_end;
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delay_event_precedes_later_events() {
        let mut k = Kernel::new();
        k.schedule(1e-9, "later").unwrap();
        k.schedule(0.0, "now").unwrap();
        let mut seen = vec![];
        k.run_until(1.0, |_, e| seen.push(e));
        assert_eq!(seen, vec!["now", "later"]);
    }

    #[test]
    fn equal_timestamps_fire_fifo() {
        let mut k = Kernel::new();
        for i in 0..10 {
            k.schedule(3.0, i).unwrap();
        }
        let mut seen = vec![];
        k.run_until(3.0, |_, e| seen.push(e));
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn run_until_is_inclusive_at_end() {
        let mut k = Kernel::new();
        k.schedule(5.0, ()).unwrap();
        assert_eq!(k.run_until(4.0, |_, _| {}), 0);
        assert_eq!(k.now(), 4.0);
        assert_eq!(k.run_until(5.0, |_, _| {}), 1);
        assert_eq!(k.now(), 5.0);
    }

    #[test]
    fn scheduling_in_the_past_fails() {
        let mut k: Kernel<()> = Kernel::new();
        k.run_until(2.0, |_, _| {});
        assert_eq!(k.schedule(1.0, ()), Err(Error::ScheduleInPast { time: 1.0, now: 2.0 }));
        assert!(k.schedule(f64::NAN, ()).is_err());
    }

    #[test]
    fn cancel_semantics() {
        let mut k = Kernel::new();
        let a = k.schedule(1.0, 'a').unwrap();
        let b = k.schedule(2.0, 'b').unwrap();
        assert!(k.cancel(a));
        assert!(!k.cancel(a));
        let mut seen = vec![];
        k.run_until(10.0, |_, e| seen.push(e));
        assert_eq!(seen, vec!['b']);
        assert!(!k.cancel(b));
        assert_eq!(k.pending(), 0);
    }

    #[test]
    fn empty_queue_advances_clock() {
        let mut k: Kernel<()> = Kernel::new();
        assert_eq!(k.run_until(10.0, |_, _| {}), 0);
        assert_eq!(k.now(), 10.0);
    }

    #[test]
    fn partial_run() {
        let mut k = Kernel::new();
        for t in [1.0, 2.0, 3.0] {
            k.schedule(t, t).unwrap();
        }
        assert_eq!(k.run_until(2.0, |_, _| {}), 2);
        assert_eq!(k.pending(), 1);
    }

    #[test]
    fn handler_can_schedule_and_clock_is_monotone() {
        let mut k = Kernel::new();
        k.schedule(0.5, 0u32).unwrap();
        let mut trace = vec![];
        k.run_until(100.0, |k, n| {
            trace.push(k.now());
            if n < 50 {
                k.schedule_in(0.25 * (n % 3) as f64, n + 1).unwrap();
            }
        });
        assert_eq!(trace.len(), 51);
        assert!(trace.windows(2).all(|w| w[0] <= w[1]));
    }
}
