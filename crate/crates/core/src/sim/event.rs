use std::collections::BTreeMap;

use crate::ids::{JobId, ServerRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Interface,
    Server(ServerRef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Arrival { job: JobId },
    FrameDelivery { job: JobId, attempt: u32, to: Endpoint, frame: Vec<u8> },
    ExecutorDone { job: JobId, attempt: u32, server: ServerRef },
    /// `periodic` ticks run on the fixed cadence; the others are per-dispatch timeout alarms.
    MonitorTick { periodic: bool },
    Crash { server: ServerRef },
    Heal { server: ServerRef },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Arrival { .. } => "arrival",
            EventKind::FrameDelivery { .. } => "frame_delivery",
            EventKind::ExecutorDone { .. } => "executor_done",
            EventKind::MonitorTick { .. } => "monitor_tick",
            EventKind::Crash { .. } => "crash",
            EventKind::Heal { .. } => "heal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: u64,
    pub seq: u64,
    /// Scheduled for a time already in the past and clamped to the clock.
    pub late: bool,
    pub kind: EventKind,
}

/// Pending events ordered by `(time, seq)`; `seq` is assigned at scheduling.
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    clock: u64,
    next_seq: u64,
    pending: BTreeMap<(u64, u64), (bool, EventKind)>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> u64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn peek_time(&self) -> Option<u64> {
        self.pending.keys().next().map(|(t, _)| *t)
    }

    pub fn schedule(&mut self, time: u64, kind: EventKind) -> u64 {
        let late = time < self.clock;
        let time = time.max(self.clock);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.insert((time, seq), (late, kind));
        seq
    }

    /// Fires the minimum `(time, seq)` event, or `None` once quiescent.
    pub fn step(&mut self) -> Option<Event> {
        let ((time, seq), (late, kind)) = self.pending.pop_first()?;
        self.clock = time;
        Some(Event { time, seq, late, kind })
    }
}
