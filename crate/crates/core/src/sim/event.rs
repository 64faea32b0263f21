use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::flow::VehicleId;
use crate::network::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    Depart(VehicleId),
    ArriveAtNode(VehicleId, NodeId),
}

impl Event {
    pub fn vehicle(&self) -> VehicleId {
        match *self {
            Event::Depart(v) | Event::ArriveAtNode(v, _) => v,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Queued {
    time: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl Ord for Queued {
    // Reversed so the max-heap pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Events ordered by time, then by insertion order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Queued>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, event: Event) {
        debug_assert!(time.is_finite());
        self.heap.push(Queued {
            time,
            seq: self.next_seq,
            event,
        });
        self.next_seq += 1;
    }

    pub fn pop(&mut self) -> Option<(f64, Event)> {
        self.heap.pop().map(|q| (q.time, q.event))
    }

    /// All events sharing the earliest time, in insertion order.
    pub fn pop_batch(&mut self) -> Option<(f64, Vec<Event>)> {
        let (time, first) = self.pop()?;
        let mut batch = vec![first];
        while self.heap.peek().is_some_and(|q| q.time == time) {
            batch.push(self.heap.pop().expect("peeked").event);
        }
        Some((time, batch))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
