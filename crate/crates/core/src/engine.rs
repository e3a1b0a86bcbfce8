//! Virtual-time discrete-event engine.
//!
//! Events are totally ordered by `(time_s, kind, seq)`. At equal times,
//! completions free nodes before demand changes, lease ticks, submissions and
//! finished setups are handled; `seq` preserves insertion order within a kind.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Event category. Declaration order is the equal-time priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    JobComplete,
    WsDemandChange,
    LeaseTimer,
    JobSubmit,
    SetupDone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<P> {
    pub time_s: u64,
    pub kind: EventKind,
    pub seq: u64,
    pub payload: P,
}

impl<P> Event<P> {
    fn key(&self) -> (u64, EventKind, u64) {
        (self.time_s, self.kind, self.seq)
    }
}

impl<P: PartialEq> Eq for Event<P> {}

impl<P: PartialEq> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P: PartialEq> Ord for Event<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Pending events plus the virtual clock. Handlers receive it mutably to
/// schedule follow-up events.
#[derive(Debug)]
pub struct EventQueue<P> {
    heap: BinaryHeap<Reverse<Event<P>>>,
    next_seq: u64,
    now_s: u64,
}

impl<P: PartialEq> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P: PartialEq> EventQueue<P> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now_s: 0,
        }
    }

    pub fn now_s(&self) -> u64 {
        self.now_s
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules an event at or after the current time.
    pub fn schedule(&mut self, time_s: u64, kind: EventKind, payload: P) -> Result<()> {
        if time_s < self.now_s {
            return Err(Error::PastEvent {
                now_s: self.now_s,
                event_s: time_s,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event {
            time_s,
            kind,
            seq,
            payload,
        }));
        Ok(())
    }

    /// Removes the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Event<P>> {
        let Reverse(ev) = self.heap.pop()?;
        self.now_s = ev.time_s;
        Some(ev)
    }

    fn peek_time(&self) -> Option<u64> {
        self.heap.peek().map(|Reverse(ev)| ev.time_s)
    }
}

pub trait Handler {
    type Payload: PartialEq;

    fn handle(
        &mut self,
        event: Event<Self::Payload>,
        queue: &mut EventQueue<Self::Payload>,
    ) -> Result<()>;

    /// Called once after all events sharing a timestamp have been handled.
    fn after_instant(&mut self, _now_s: u64) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunStats {
    pub events: u64,
    /// Events left unprocessed because they fall after the horizon.
    pub beyond_horizon: usize,
}

/// Processes events in order until the queue drains or the next event lies
/// after `horizon_s`.
pub fn run<H: Handler>(
    queue: &mut EventQueue<H::Payload>,
    handler: &mut H,
    horizon_s: u64,
) -> Result<RunStats> {
    let mut stats = RunStats::default();
    while let Some(t) = queue.peek_time() {
        if t > horizon_s {
            break;
        }
        let ev = queue.pop().expect("peeked");
        stats.events += 1;
        handler.handle(ev, queue)?;
        if queue.peek_time() != Some(t) {
            handler.after_instant(t)?;
        }
    }
    stats.beyond_horizon = queue.len();
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Default)]
    struct Recorder {
        seen: Vec<(u64, EventKind, u32)>,
        instants: Vec<u64>,
        echo_at: Option<u64>,
    }

    impl Handler for Recorder {
        type Payload = u32;

        fn handle(&mut self, ev: Event<u32>, q: &mut EventQueue<u32>) -> Result<()> {
            self.seen.push((ev.time_s, ev.kind, ev.payload));
            if let Some(at) = self.echo_at.take() {
                q.schedule(at, EventKind::SetupDone, 99)?;
            }
            Ok(())
        }

        fn after_instant(&mut self, now_s: u64) -> Result<()> {
            self.instants.push(now_s);
            Ok(())
        }
    }

    #[test]
    fn empty_queue_runs_nothing() {
        let mut q = EventQueue::new();
        let mut r = Recorder::default();
        let stats = run(&mut q, &mut r, 100).unwrap();
        assert_eq!(stats, RunStats::default());
    }

    #[test]
    fn equal_time_kind_priority() {
        let mut q = EventQueue::new();
        q.schedule(5, EventKind::SetupDone, 1).unwrap();
        q.schedule(5, EventKind::JobSubmit, 2).unwrap();
        q.schedule(5, EventKind::LeaseTimer, 3).unwrap();
        q.schedule(5, EventKind::WsDemandChange, 4).unwrap();
        q.schedule(5, EventKind::JobComplete, 5).unwrap();
        q.schedule(5, EventKind::JobSubmit, 6).unwrap();
        q.schedule(1, EventKind::SetupDone, 7).unwrap();
        let mut r = Recorder::default();
        run(&mut q, &mut r, 10).unwrap();
        let order: Vec<u32> = r.seen.iter().map(|s| s.2).collect();
        assert_eq!(order, vec![7, 5, 4, 3, 2, 6, 1]);
        assert_eq!(r.instants, vec![1, 5]);
    }

    #[test]
    fn horizon_cuts_off_later_events() {
        let mut q = EventQueue::new();
        q.schedule(10, EventKind::JobSubmit, 1).unwrap();
        q.schedule(11, EventKind::JobSubmit, 2).unwrap();
        let mut r = Recorder::default();
        let stats = run(&mut q, &mut r, 10).unwrap();
        assert_eq!(stats.events, 1);
        assert_eq!(stats.beyond_horizon, 1);
    }

    #[test]
    fn scheduling_in_the_past_is_fatal() {
        let mut q = EventQueue::new();
        q.schedule(10, EventKind::JobSubmit, 1).unwrap();
        let mut r = Recorder {
            echo_at: Some(3),
            ..Default::default()
        };
        let err = run(&mut q, &mut r, 100).unwrap_err();
        assert!(matches!(
            err,
            Error::PastEvent {
                now_s: 10,
                event_s: 3
            }
        ));
    }

    #[test]
    fn same_time_follow_up_runs_in_same_instant() {
        let mut q = EventQueue::new();
        q.schedule(4, EventKind::JobSubmit, 1).unwrap();
        let mut r = Recorder {
            echo_at: Some(4),
            ..Default::default()
        };
        run(&mut q, &mut r, 100).unwrap();
        assert_eq!(r.seen.len(), 2);
        assert_eq!(r.instants, vec![4]);
    }
}
