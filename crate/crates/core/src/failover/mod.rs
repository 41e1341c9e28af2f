//! Interface-side monitoring and emergency load shift.
//!
//! Every dispatch attempt is logged and tracked in the active list until its
//! outputs arrive. The monitor periodically scans the active list: complete
//! entries are dropped, entries that have waited at least `timeout_t` with
//! files still missing become missing links, and each missing link is
//! re-dispatched to a different server of the same or another network.

pub mod log;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::NsMap;
use crate::dispatch::{route, JobRequest, SelectionDecision};
use crate::ids::{JobId, ServerRef};

pub use log::{LogFile, LogRecord, HEADER_LINE, TITLE_LINE};

pub const DEFAULT_TIMEOUT_T: u64 = 1000;
pub const DEFAULT_INTERVAL_2: u64 = 250;

#[derive(Debug, Error)]
pub enum FailoverError {
    #[error("log parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActiveEntry {
    pub job_id: JobId,
    pub record: LogRecord,
}

/// In-flight jobs in dispatch order, one entry per job.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActiveList {
    entries: Vec<ActiveEntry>,
}

impl ActiveList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces any existing entry for the same job.
    pub fn track(&mut self, job_id: JobId, record: LogRecord) {
        self.entries.retain(|e| e.job_id != job_id);
        self.entries.push(ActiveEntry { job_id, record });
    }

    pub fn get_mut(&mut self, job_id: &JobId) -> Option<&mut LogRecord> {
        self.entries.iter_mut().find(|e| &e.job_id == job_id).map(|e| &mut e.record)
    }

    pub fn remove(&mut self, job_id: &JobId) -> Option<ActiveEntry> {
        let at = self.entries.iter().position(|e| &e.job_id == job_id)?;
        Some(self.entries.remove(at))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActiveEntry> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingReason {
    Timeout,
    ServerCrash,
}

impl fmt::Display for MissingReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MissingReason::Timeout => "timeout",
            MissingReason::ServerCrash => "server_crash",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingLink {
    pub job_id: JobId,
    pub record: LogRecord,
    pub reason: MissingReason,
}

/// Scans the active list in order. Complete entries are deleted; incomplete
/// entries at least `timeout_t` old are removed and returned as missing links.
pub fn find_missing_links(active: &mut ActiveList, now: u64, timeout_t: u64) -> Vec<MissingLink> {
    assert!(timeout_t > 0, "timeout_t must be positive");
    let mut missing = Vec::new();
    active.entries.retain(|entry| {
        if entry.record.is_complete() {
            return false;
        }
        if now.saturating_sub(entry.record.dispatched_at) >= timeout_t {
            missing.push(MissingLink { job_id: entry.job_id.clone(), record: entry.record.clone(), reason: MissingReason::Timeout });
            return false;
        }
        true
    });
    missing
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ShiftOutcome {
    Reassigned { decision: SelectionDecision },
    NoCapacity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadShift {
    pub job_id: JobId,
    pub failed: Option<ServerRef>,
    pub reason: MissingReason,
    pub outcome: ShiftOutcome,
}

/// Servers that already failed each job; a job is never sent back to one of them.
pub type Exclusions = BTreeMap<JobId, BTreeSet<ServerRef>>;

/// Re-dispatches every missing link. The failed server loses its slot, is
/// marked inactive and joins the job's exclusion set before re-routing.
pub fn emergency_load_shift(
    map: &mut NsMap,
    missing: &[MissingLink],
    jobs: &BTreeMap<JobId, JobRequest>,
    exclusions: &mut Exclusions,
) -> Vec<LoadShift> {
    missing
        .iter()
        .map(|link| {
            let failed = map.server_by_ip(&link.record.internal_ip);
            if let Some(server) = &failed {
                let _ = map.release(server.network.as_str(), server.server.as_str());
                let _ = map.set_active(server.network.as_str(), server.server.as_str(), false);
                exclusions.entry(link.job_id.clone()).or_default().insert(server.clone());
            }
            let excluded = exclusions.entry(link.job_id.clone()).or_default();
            let outcome = match jobs.get(&link.job_id) {
                Some(req) => match route(map, req, excluded) {
                    Ok(decision) => ShiftOutcome::Reassigned { decision },
                    Err(_) => ShiftOutcome::NoCapacity,
                },
                None => ShiftOutcome::NoCapacity,
            };
            LoadShift { job_id: link.job_id.clone(), failed, reason: link.reason, outcome }
        })
        .collect()
}

/// The monitoring sub-system: active list, per-job exclusions and cadence.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub active: ActiveList,
    pub exclusions: Exclusions,
    pub timeout_t: u64,
    pub interval_2: u64,
}

impl Monitor {
    pub fn new(timeout_t: u64, interval_2: u64) -> Self {
        assert!(timeout_t > 0 && interval_2 > 0);
        Self { active: ActiveList::new(), exclusions: Exclusions::new(), timeout_t, interval_2 }
    }

    /// Next periodic tick strictly after `now`: ticks fire at `k * interval_2`, `k >= 1`.
    pub fn next_periodic_tick(&self, now: u64) -> u64 {
        (now / self.interval_2 + 1) * self.interval_2
    }

    pub fn excluded(&self, job_id: &JobId) -> BTreeSet<ServerRef> {
        self.exclusions.get(job_id).cloned().unwrap_or_default()
    }

    /// One monitoring pass. With nothing in flight it does nothing. Missing
    /// links whose server is already known inactive are classified as crashes.
    pub fn tick(&mut self, map: &mut NsMap, jobs: &BTreeMap<JobId, JobRequest>, now: u64) -> Vec<LoadShift> {
        if self.active.is_empty() {
            return Vec::new();
        }
        let mut missing = find_missing_links(&mut self.active, now, self.timeout_t);
        for link in &mut missing {
            let crashed = map
                .server_by_ip(&link.record.internal_ip)
                .and_then(|r| map.server(r.network.as_str(), r.server.as_str()).ok().map(|s| !s.active))
                .unwrap_or(false);
            if crashed {
                link.reason = MissingReason::ServerCrash;
            }
        }
        emergency_load_shift(map, &missing, jobs, &mut self.exclusions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_topology;
    use crate::ids::{ApplicationId, NetworkId, ServerId, UserId};

    fn fixture() -> NsMap {
        load_topology(include_bytes!("../../fixtures/four_networks.json")).unwrap()
    }

    fn record(n: u32, got: u32, at: u64) -> LogRecord {
        LogRecord {
            external_ip: "10.20.30.41".into(),
            app: ApplicationId::new("App2").unwrap(),
            internal_ip: "192.168.10.80".into(),
            n_files_expected: n,
            n_files_received: got,
            dispatched_at: at,
        }
    }

    fn job(id: &str) -> JobId {
        JobId::new(id).unwrap()
    }

    #[test]
    fn complete_entries_are_deleted() {
        let mut active = ActiveList::new();
        active.track(job("j1"), record(4, 4, 0));
        assert!(find_missing_links(&mut active, 10, 100).is_empty());
        assert!(active.is_empty());
    }

    #[test]
    fn timed_out_entries_become_missing() {
        let mut active = ActiveList::new();
        active.track(job("j1"), record(6, 2, 0));
        let missing = find_missing_links(&mut active, 100, 100);
        assert_eq!(missing.len(), 1);
        assert_eq!(missing[0].reason, MissingReason::Timeout);
        assert!(active.is_empty());
    }

    #[test]
    fn young_entries_stay() {
        let mut active = ActiveList::new();
        active.track(job("j1"), record(6, 2, 0));
        assert!(find_missing_links(&mut active, 99, 100).is_empty());
        assert_eq!(active.len(), 1);
    }

    #[test]
    fn scan_keeps_list_order() {
        let mut active = ActiveList::new();
        active.track(job("b"), record(6, 0, 0));
        active.track(job("a"), record(6, 0, 5));
        active.track(job("c"), record(6, 0, 50));
        let missing = find_missing_links(&mut active, 105, 100);
        assert_eq!(missing.iter().map(|m| m.job_id.as_str()).collect::<Vec<_>>(), vec!["b", "a"]);
        assert_eq!(active.iter().map(|e| e.job_id.as_str()).collect::<Vec<_>>(), vec!["c"]);
    }

    fn request(id: &str, app: &str) -> JobRequest {
        JobRequest {
            job_id: job(id),
            user_id: UserId::new("u1").unwrap(),
            external_ip: "10.20.30.40".into(),
            app: ApplicationId::new(app).unwrap(),
            n_files: 4,
            arrival_time: 0,
            payload: vec![],
        }
    }

    fn link_for(map: &NsMap, id: &str, app: &str, net: &str, srv: &str) -> MissingLink {
        MissingLink {
            job_id: job(id),
            record: LogRecord {
                external_ip: "10.20.30.40".into(),
                app: ApplicationId::new(app).unwrap(),
                internal_ip: map.server(net, srv).unwrap().internal_ip.clone(),
                n_files_expected: 4,
                n_files_received: 0,
                dispatched_at: 0,
            },
            reason: MissingReason::Timeout,
        }
    }

    #[test]
    fn crash_of_n4_s2_shifts_to_n4_s3() {
        let mut map = fixture();
        map.occupy("n4", "s2").unwrap();
        let jobs: BTreeMap<_, _> = [(job("j1"), request("j1", "App4"))].into();
        let mut exclusions = Exclusions::new();
        let link = link_for(&map, "j1", "App4", "n4", "s2");
        let shifts = emergency_load_shift(&mut map, &[link], &jobs, &mut exclusions);
        let ShiftOutcome::Reassigned { decision } = &shifts[0].outcome else { panic!("{shifts:?}") };
        assert_eq!((decision.network.as_str(), decision.server.as_str()), ("n4", "s3"));
        let s2 = map.server("n4", "s2").unwrap();
        assert!(!s2.active);
        assert_eq!(s2.current_load, 0);
        assert_eq!(exclusions[&job("j1")].len(), 1);
    }

    #[test]
    fn only_host_crashing_is_no_capacity() {
        let mut map = load_topology(
            br#"{"networks":[{"id":"n1","threshold_load":2,"servers":[
                {"id":"s1","internal_ip":"10.0.0.1","threshold_load":1,"apps":["solo"]},
                {"id":"s2","internal_ip":"10.0.0.2","threshold_load":1,"apps":["other"]}]}]}"#,
        )
        .unwrap();
        map.occupy("n1", "s1").unwrap();
        let jobs: BTreeMap<_, _> = [(job("j1"), request("j1", "solo"))].into();
        let link = link_for(&map, "j1", "solo", "n1", "s1");
        let shifts = emergency_load_shift(&mut map, &[link], &jobs, &mut Exclusions::new());
        assert_eq!(shifts[0].outcome, ShiftOutcome::NoCapacity);
        assert_eq!(map.total_load(), 0);
    }

    #[test]
    fn two_missing_jobs_shift_independently() {
        let mut map = fixture();
        map.occupy("n4", "s2").unwrap();
        map.occupy("n2", "s3").unwrap();
        let jobs: BTreeMap<_, _> = [(job("a"), request("a", "App4")), (job("b"), request("b", "App3"))].into();
        let links = [link_for(&map, "a", "App4", "n4", "s2"), link_for(&map, "b", "App3", "n2", "s3")];
        let mut exclusions = Exclusions::new();
        let shifts = emergency_load_shift(&mut map, &links, &jobs, &mut exclusions);
        assert!(shifts.iter().all(|s| matches!(s.outcome, ShiftOutcome::Reassigned { .. })));
        let a = &exclusions[&job("a")];
        let b = &exclusions[&job("b")];
        assert!(a.is_disjoint(b));
        assert_eq!(a.iter().next().unwrap(), &ServerRef::new(NetworkId::new("n4").unwrap(), ServerId::new("s2").unwrap()));
        for s in &shifts {
            let ShiftOutcome::Reassigned { decision } = &s.outcome else { unreachable!() };
            assert!(!exclusions[&s.job_id].contains(&decision.server_ref()));
        }
    }

    #[test]
    fn monitor_cadence_and_fast_path() {
        let mut monitor = Monitor::new(DEFAULT_TIMEOUT_T, 5);
        assert_eq!(monitor.next_periodic_tick(0), 5);
        assert_eq!(monitor.next_periodic_tick(5), 10);
        assert_eq!(monitor.next_periodic_tick(12), 15);
        let mut map = fixture();
        assert!(monitor.tick(&mut map, &BTreeMap::new(), 5).is_empty());
    }

    #[test]
    fn monitor_reassigns_one_timed_out_entry() {
        let mut map = fixture();
        map.occupy("n4", "s2").unwrap();
        let jobs: BTreeMap<_, _> = [(job("j1"), request("j1", "App4"))].into();
        let mut monitor = Monitor::new(100, 25);
        let link = link_for(&map, "j1", "App4", "n4", "s2");
        monitor.active.track(job("j1"), link.record);
        assert!(monitor.tick(&mut map, &jobs, 75).is_empty());
        let shifts = monitor.tick(&mut map, &jobs, 100);
        assert_eq!(shifts.len(), 1);
        assert_eq!(shifts[0].reason, MissingReason::Timeout);
        assert!(matches!(shifts[0].outcome, ShiftOutcome::Reassigned { .. }));
    }

    #[test]
    fn monitor_labels_known_crashes() {
        let mut map = fixture();
        map.occupy("n4", "s2").unwrap();
        map.set_active("n4", "s2", false).unwrap();
        let jobs: BTreeMap<_, _> = [(job("j1"), request("j1", "App4"))].into();
        let mut monitor = Monitor::new(100, 25);
        monitor.active.track(job("j1"), link_for(&map, "j1", "App4", "n4", "s2").record);
        let shifts = monitor.tick(&mut map, &jobs, 200);
        assert_eq!(shifts[0].reason, MissingReason::ServerCrash);
    }
}
