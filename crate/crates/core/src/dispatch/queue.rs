use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::Serialize;

use crate::ids::{ApplicationId, JobId, NetworkId, ServerId};
use crate::ratio::Ratio;

/// Notice of a completed transaction, fanned out to related servers and networks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateMessage {
    pub job_id: JobId,
    pub app: ApplicationId,
    pub external_ip: String,
    pub serving_network: NetworkId,
    pub serving_server: ServerId,
    pub created_at: u64,
    pub frequency_at_send: Ratio,
}

/// Transmission order: higher frequency first, then older first, then job id.
pub fn transmission_order(a: &UpdateMessage, b: &UpdateMessage) -> Ordering {
    b.frequency_at_send
        .cmp(&a.frequency_at_send)
        .then(a.created_at.cmp(&b.created_at))
        .then(a.job_id.cmp(&b.job_id))
}

/// Updates waiting to be propagated, kept sorted by [`transmission_order`].
#[derive(Debug, Clone, Default)]
pub struct TransmissionQueue {
    entries: VecDeque<UpdateMessage>,
}

impl TransmissionQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts after every entry that does not sort after `u`, so equal keys keep arrival order.
    pub fn enqueue(&mut self, u: UpdateMessage) {
        let at = self.entries.partition_point(|e| transmission_order(e, &u) != Ordering::Greater);
        self.entries.insert(at, u);
    }

    pub fn pop(&mut self) -> Option<UpdateMessage> {
        self.entries.pop_front()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &UpdateMessage> {
        self.entries.iter()
    }

    /// Pops everything in transmission order.
    pub fn drain(&mut self) -> Vec<UpdateMessage> {
        self.entries.drain(..).collect()
    }
}

/// Number of adjacent pairs in a pop sequence that break
/// (frequency desc, created_at asc).
pub fn order_violations(popped: &[UpdateMessage]) -> usize {
    popped
        .windows(2)
        .filter(|w| {
            let (a, b) = (&w[0], &w[1]);
            a.frequency_at_send < b.frequency_at_send
                || (a.frequency_at_send == b.frequency_at_send && a.created_at > b.created_at)
        })
        .count()
}
