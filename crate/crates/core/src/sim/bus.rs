//! Broadcast message bus with a fixed delivery latency.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

/// Slack on delivery deadlines so that `t + latency` computed from
/// accumulated ticks is not missed by rounding.
const DEADLINE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<M> {
    pub sent_at: f64,
    pub sender: u32,
    pub payload: M,
}

/// Messages become visible to every other agent `latency` seconds after
/// they are sent. Delivery preserves send order, hence FIFO per sender.
/// Senders handle their own messages directly.
#[derive(Debug, Clone)]
pub struct MessageBus<M> {
    latency: f64,
    queue: VecDeque<Envelope<M>>,
}

impl<M> MessageBus<M> {
    pub fn new(latency: f64) -> Self {
        assert!(latency >= 0.0, "latency must be non-negative");
        MessageBus { latency, queue: VecDeque::new() }
    }

    pub fn latency(&self) -> f64 {
        self.latency
    }

    pub fn publish(&mut self, sender: u32, sent_at: f64, payload: M) {
        self.queue.push_back(Envelope { sent_at, sender, payload });
    }

    /// Removes and returns every message visible at `now`.
    ///
    /// Messages are queued in nondecreasing send time within a tick batch;
    /// the scan stops at the first message not yet visible.
    pub fn deliver(&mut self, now: f64) -> Vec<Envelope<M>> {
        let mut out = Vec::new();
        while let Some(front) = self.queue.front() {
            if front.sent_at + self.latency > now + DEADLINE_SLACK {
                break;
            }
            out.extend(self.queue.pop_front());
        }
        out
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }
}
