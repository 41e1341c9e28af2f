//! Deterministic discrete-event harness: one event loop drives catalog,
//! dispatch, failover and protocol over a virtual tick clock.

pub mod event;
pub mod fault;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::catalog::{validate_topology, NsMap};
use crate::dispatch::{
    dispatch, fnv1a64, order_violations, route, AccessFrequencyTable, DispatchError, Divergence, JobRequest, ReplicaStore,
    SelectionDecision, TransmissionQueue, UpdateMessage,
};
use crate::failover::{LogFile, LogRecord, Monitor, ShiftOutcome, DEFAULT_INTERVAL_2, DEFAULT_TIMEOUT_T};
use crate::ids::{JobId, ServerRef};
use crate::protocol::{decode_results, encode_job, release_server, JobEnvelope, ServerEndpoint, StubExecutor};

pub use event::{Endpoint, Event, EventKind, EventQueue};
pub use fault::{load_fault_plan, CrashSpec, FaultPlan, XorShift64Star};

pub const TRACE_MAGIC: &str = "# nsroute trace v1";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("fault plan names unknown server {0}")]
    UnknownServer(ServerRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimParams {
    pub timeout_t: u64,
    pub interval_2: u64,
    /// Ticks for one interface/server hop.
    pub hop_latency: u64,
    pub exec_ticks: u64,
    /// Events scheduled after this tick are not fired.
    pub max_ticks: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { timeout_t: DEFAULT_TIMEOUT_T, interval_2: DEFAULT_INTERVAL_2, hop_latency: 1, exec_ticks: 10, max_ticks: 100_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobPhase {
    Pending,
    Deferred { since: u64 },
    InFlight,
    Completed,
    Unschedulable,
}

#[derive(Debug, Clone)]
pub struct JobState {
    pub request: JobRequest,
    pub phase: JobPhase,
    pub attempt: u32,
    pub assignment: Option<ServerRef>,
    pub log_row: Option<usize>,
    /// Built at the first successful dispatch and retargeted on failover.
    pub update: Option<UpdateMessage>,
    pub completed_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionTime {
    pub job_id: JobId,
    pub arrival_time: u64,
    pub completed_at: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub header: String,
    pub lines: Vec<String>,
}

impl Trace {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(64 * (self.lines.len() + 1));
        out.push_str(&self.header);
        out.push('\n');
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metrics {
    pub jobs_submitted: u64,
    pub jobs_completed: u64,
    pub jobs_unschedulable: u64,
    pub failovers: u64,
    pub dispatches: u64,
    pub frames_sent: u64,
    pub frames_dropped: u64,
    pub stale_frames: u64,
    pub propagation_rounds: u64,
    pub queue_order_violations: u64,
    pub final_time: u64,
    pub completion_times: Vec<CompletionTime>,
    pub trace: Trace,
}

impl Metrics {
    pub fn incomplete(&self) -> u64 {
        self.jobs_submitted - self.jobs_completed - self.jobs_unschedulable
    }

    /// `key=value` counters, a blank line, then a CSV block of completions.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let counters = [
            ("jobs_submitted", self.jobs_submitted),
            ("jobs_completed", self.jobs_completed),
            ("jobs_unschedulable", self.jobs_unschedulable),
            ("jobs_incomplete", self.incomplete()),
            ("failovers", self.failovers),
            ("dispatches", self.dispatches),
            ("frames_sent", self.frames_sent),
            ("frames_dropped", self.frames_dropped),
            ("stale_frames", self.stale_frames),
            ("propagation_rounds", self.propagation_rounds),
            ("queue_order_violations", self.queue_order_violations),
            ("final_time", self.final_time),
        ];
        for (k, v) in counters {
            let _ = writeln!(out, "{k}={v}");
        }
        out.push('\n');
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["job_id", "arrival_time", "completed_at", "latency"]).expect("in-memory csv");
        for c in &self.completion_times {
            w.write_record([
                c.job_id.to_string(),
                c.arrival_time.to_string(),
                c.completed_at.to_string(),
                (c.completed_at - c.arrival_time).to_string(),
            ])
            .expect("in-memory csv");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8"));
        out
    }
}

type Kv = Vec<(&'static str, String)>;

pub struct Simulation {
    params: SimParams,
    plan: FaultPlan,
    map: NsMap,
    queue: EventQueue,
    rng: XorShift64Star,
    jobs: BTreeMap<JobId, JobState>,
    requests: BTreeMap<JobId, JobRequest>,
    deferred: Vec<JobId>,
    endpoints: BTreeMap<ServerRef, ServerEndpoint>,
    executor: StubExecutor,
    monitor: Monitor,
    log: LogFile,
    table: AccessFrequencyTable,
    tx: TransmissionQueue,
    replicas: ReplicaStore,
    outputs: BTreeMap<String, BTreeMap<String, Vec<u8>>>,
    store_counts: BTreeMap<JobId, u32>,
    metrics: Metrics,
}

impl Simulation {
    pub fn new(map: NsMap, workload: Vec<JobRequest>, plan: FaultPlan, params: SimParams) -> Result<Self, SimError> {
        if params.timeout_t == 0 || params.interval_2 == 0 {
            return Err(SimError::Config("timeout_t and interval_2 must be positive".into()));
        }
        validate_topology(&map).map_err(|e| SimError::Config(e.to_string()))?;
        plan.validate(&map)?;
        let mut jobs = BTreeMap::new();
        let mut requests = BTreeMap::new();
        for req in &workload {
            req.validate().map_err(|e| SimError::Config(e.to_string()))?;
            if requests.insert(req.job_id.clone(), req.clone()).is_some() {
                return Err(SimError::Config(format!("duplicate job id `{}`", req.job_id)));
            }
            jobs.insert(
                req.job_id.clone(),
                JobState {
                    request: req.clone(),
                    phase: JobPhase::Pending,
                    attempt: 0,
                    assignment: None,
                    log_row: None,
                    update: None,
                    completed_at: None,
                },
            );
        }
        let workload_doc = serde_json::to_string(&workload).map_err(|e| SimError::Config(e.to_string()))?;
        let header = format!(
            "{TRACE_MAGIC} topology={:016x} workload={:016x} rng={} seed={} drop_rate={} timeout_t={} interval2={} hop_latency={} exec_ticks={} max_ticks={}",
            fnv1a64(map.to_document().as_bytes()),
            fnv1a64(workload_doc.as_bytes()),
            XorShift64Star::NAME,
            plan.rng_seed,
            plan.frame_drop_rate,
            params.timeout_t,
            params.interval_2,
            params.hop_latency,
            params.exec_ticks,
            params.max_ticks,
        );
        let endpoints = map.server_refs().map(|(r, _)| (r, ServerEndpoint::new())).collect();
        let mut queue = EventQueue::new();
        for req in &workload {
            queue.schedule(req.arrival_time, EventKind::Arrival { job: req.job_id.clone() });
        }
        for c in &plan.crashes {
            queue.schedule(c.time, EventKind::Crash { server: c.server_ref() });
        }
        if !workload.is_empty() {
            queue.schedule(params.interval_2, EventKind::MonitorTick { periodic: true });
        }
        let metrics = Metrics { trace: Trace { header, lines: Vec::new() }, ..Metrics::default() };
        Ok(Self {
            rng: XorShift64Star::new(plan.rng_seed),
            monitor: Monitor::new(params.timeout_t, params.interval_2),
            params,
            plan,
            map,
            queue,
            jobs,
            requests,
            deferred: Vec::new(),
            endpoints,
            executor: StubExecutor,
            log: LogFile::new(),
            table: AccessFrequencyTable::new(),
            tx: TransmissionQueue::new(),
            replicas: ReplicaStore::new(),
            outputs: BTreeMap::new(),
            store_counts: BTreeMap::new(),
            metrics,
        })
    }

    /// Fires events until quiescent or past `max_ticks`.
    pub fn run(&mut self) -> &Metrics {
        while let Some(t) = self.queue.peek_time() {
            if t > self.params.max_ticks {
                break;
            }
            let Some(ev) = self.queue.step() else { break };
            self.fire(ev);
        }
        self.metrics.final_time = self.queue.now();
        &self.metrics
    }

    pub fn schedule(&mut self, time: u64, kind: EventKind) -> u64 {
        self.queue.schedule(time, kind)
    }

    /// Fires one event; `None` once quiescent.
    pub fn step(&mut self) -> Option<u64> {
        let ev = self.queue.step()?;
        let seq = ev.seq;
        self.fire(ev);
        self.metrics.final_time = self.queue.now();
        Some(seq)
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn into_metrics(self) -> Metrics {
        self.metrics
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn plan(&self) -> &FaultPlan {
        &self.plan
    }

    pub fn map(&self) -> &NsMap {
        &self.map
    }

    pub fn log(&self) -> &LogFile {
        &self.log
    }

    pub fn job(&self, id: &JobId) -> Option<&JobState> {
        self.jobs.get(id)
    }

    pub fn frequency_table(&self) -> &AccessFrequencyTable {
        &self.table
    }

    pub fn replicas(&self) -> &ReplicaStore {
        &self.replicas
    }

    pub fn replicas_mut(&mut self) -> &mut ReplicaStore {
        &mut self.replicas
    }

    /// Stored outputs by external IP, then file name.
    pub fn outputs(&self) -> &BTreeMap<String, BTreeMap<String, Vec<u8>>> {
        &self.outputs
    }

    /// How many times a complete output set was stored for the job.
    pub fn store_count(&self, id: &JobId) -> u32 {
        self.store_counts.get(id).copied().unwrap_or(0)
    }

    pub fn is_quiescent(&self) -> bool {
        self.queue.is_empty()
    }

    /// Replica agreement across every related-network closure.
    pub fn replica_consistency(&self) -> Result<(), Divergence> {
        self.replicas.consistency(&self.map)
    }

    /// In-flight jobs, active-list entries and occupied slots must agree.
    pub fn conservation(&self) -> Result<(), String> {
        let in_flight = self.jobs.values().filter(|j| j.phase == JobPhase::InFlight).count() as u64;
        let active = self.monitor.active.len() as u64;
        let load = self.map.total_load();
        if in_flight != active || in_flight != load {
            return Err(format!("in-flight {in_flight}, active entries {active}, occupied slots {load}"));
        }
        if in_flight == 0 && self.map.busy_servers() != 0 {
            return Err(format!("{} busy servers with nothing in flight", self.map.busy_servers()));
        }
        Ok(())
    }

    fn fire(&mut self, ev: Event) {
        let now = ev.time;
        let name = ev.kind.name();
        let mut kv = Kv::new();
        match ev.kind {
            EventKind::Arrival { job } => self.on_arrival(job, now, &mut kv),
            EventKind::FrameDelivery { job, attempt, to, frame } => self.on_delivery(job, attempt, to, frame, now, &mut kv),
            EventKind::ExecutorDone { job, attempt, server } => self.on_executor_done(job, attempt, server, now, &mut kv),
            EventKind::MonitorTick { periodic } => self.on_monitor_tick(periodic, now, &mut kv),
            EventKind::Crash { server } => self.on_crash(server, &mut kv),
            EventKind::Heal { server } => self.on_heal(server, now, &mut kv),
        }
        let mut line = format!("t={now} seq={} kind={name}", ev.seq);
        if ev.late {
            line.push_str(" late=1");
        }
        for (k, v) in kv {
            let _ = write!(line, " {k}={v}");
        }
        self.metrics.trace.lines.push(line);
    }

    fn on_arrival(&mut self, job: JobId, now: u64, kv: &mut Kv) {
        self.metrics.jobs_submitted += 1;
        let app = self.jobs[&job].request.app.clone();
        kv.push(("job", job.to_string()));
        kv.push(("app", app.to_string()));
        self.attempt_dispatch(&job, now, kv);
    }

    fn attempt_dispatch(&mut self, job: &JobId, now: u64, kv: &mut Kv) {
        let state = &self.jobs[job];
        let req = state.request.clone();
        let phase = state.phase;
        let result = if state.update.is_none() {
            dispatch(&mut self.map, &req, &mut self.table, now).map(|d| (d.decision, Some(d.update)))
        } else {
            route(&mut self.map, &req, &self.monitor.excluded(job)).map(|d| (d, None))
        };
        match result {
            Ok((decision, update)) => {
                if let Some(u) = update {
                    self.jobs.get_mut(job).expect("known job").update = Some(u);
                }
                self.start_attempt(job, decision, now, kv);
            }
            Err(DispatchError::NoCapacity(_)) => {
                let since = match phase {
                    JobPhase::Deferred { since } => since,
                    _ => now,
                };
                self.defer_or_give_up(job, since, now, kv);
            }
            Err(e) => {
                kv.push(("error", error_code(&e).into()));
                self.give_up(job, kv);
            }
        }
    }

    /// A job waits for capacity while some non-excluded server hosts its app
    /// and it has waited less than `timeout_t`.
    fn defer_or_give_up(&mut self, job: &JobId, since: u64, now: u64, kv: &mut Kv) {
        let app = &self.jobs[job].request.app;
        let excluded = self.monitor.excluded(job);
        let hosted = self.map.server_refs().any(|(r, s)| s.hosts(app) && !excluded.contains(&r));
        if hosted && now - since < self.params.timeout_t {
            self.jobs.get_mut(job).expect("known job").phase = JobPhase::Deferred { since };
            if !self.deferred.contains(job) {
                self.deferred.push(job.clone());
            }
            kv.push(("defer", job.to_string()));
        } else {
            self.give_up(job, kv);
        }
    }

    fn give_up(&mut self, job: &JobId, kv: &mut Kv) {
        self.jobs.get_mut(job).expect("known job").phase = JobPhase::Unschedulable;
        self.deferred.retain(|j| j != job);
        self.metrics.jobs_unschedulable += 1;
        kv.push(("unschedulable", job.to_string()));
    }

    fn start_attempt(&mut self, job: &JobId, decision: SelectionDecision, now: u64, kv: &mut Kv) {
        let server = decision.server_ref();
        let internal_ip = self
            .map
            .server(server.network.as_str(), server.server.as_str())
            .expect("decision names a known server")
            .internal_ip
            .clone();
        let state = self.jobs.get_mut(job).expect("known job");
        state.attempt += 1;
        state.assignment = Some(server.clone());
        state.phase = JobPhase::InFlight;
        if let Some(u) = &mut state.update {
            u.serving_network = decision.network.clone();
            u.serving_server = decision.server.clone();
        }
        let req = &state.request;
        let record = LogRecord {
            external_ip: req.external_ip.clone(),
            app: req.app.clone(),
            internal_ip,
            n_files_expected: req.n_files,
            n_files_received: 0,
            dispatched_at: now,
        };
        let envelope = JobEnvelope {
            job_id: job.clone(),
            external_ip: req.external_ip.clone(),
            app: req.app.clone(),
            network: decision.network.clone(),
            server: decision.server.clone(),
            n_files: req.n_files,
            payload: req.payload.clone(),
        };
        let attempt = state.attempt;
        state.log_row = Some(self.log.append(record.clone()));
        self.monitor.active.track(job.clone(), record);
        self.deferred.retain(|j| j != job);
        self.metrics.dispatches += 1;
        kv.push(("dispatch", format!("{job}->{server}#{attempt}")));
        kv.push(("score", decision.score.to_string()));
        kv.push(("tie", u8::from(decision.tie_broken).to_string()));
        self.queue.schedule(now + self.params.timeout_t, EventKind::MonitorTick { periodic: false });
        self.send_frame(job, attempt, Endpoint::Server(server), encode_job(&envelope), now, kv);
    }

    fn send_frame(&mut self, job: &JobId, attempt: u32, to: Endpoint, frame: Vec<u8>, now: u64, kv: &mut Kv) {
        self.metrics.frames_sent += 1;
        let dropped = self.plan.frame_drop_rate > 0.0 && self.rng.next_unit() < self.plan.frame_drop_rate;
        if dropped {
            self.metrics.frames_dropped += 1;
            kv.push(("frame", format!("dropped:{}", frame.len())));
            return;
        }
        kv.push(("frame", format!("sent:{}", frame.len())));
        self.queue.schedule(now + self.params.hop_latency, EventKind::FrameDelivery { job: job.clone(), attempt, to, frame });
    }

    fn on_delivery(&mut self, job: JobId, attempt: u32, to: Endpoint, frame: Vec<u8>, now: u64, kv: &mut Kv) {
        kv.push(("job", job.to_string()));
        kv.push(("attempt", attempt.to_string()));
        match to {
            Endpoint::Server(server) => {
                kv.push(("to", server.to_string()));
                let endpoint = self.endpoints.get_mut(&server).expect("endpoint per server");
                if !endpoint.is_up() {
                    kv.push(("result", "lost".into()));
                    return;
                }
                match endpoint.ip_receive(&frame, &mut self.executor) {
                    Ok(_) => {
                        kv.push(("result", "executing".into()));
                        self.queue.schedule(now + self.params.exec_ticks, EventKind::ExecutorDone { job, attempt, server });
                    }
                    Err(e) => kv.push(("result", format!("rejected:{}", protocol_code(&e)))),
                }
            }
            Endpoint::Interface => {
                kv.push(("to", "interface".into()));
                self.on_results(job, attempt, &frame, now, kv);
            }
        }
    }

    fn on_executor_done(&mut self, job: JobId, attempt: u32, server: ServerRef, now: u64, kv: &mut Kv) {
        kv.push(("job", job.to_string()));
        kv.push(("attempt", attempt.to_string()));
        kv.push(("server", server.to_string()));
        let endpoint = self.endpoints.get_mut(&server).expect("endpoint per server");
        match endpoint.op_send(&job) {
            Some(frame) => self.send_frame(&job, attempt, Endpoint::Interface, frame, now, kv),
            None => kv.push(("result", "lost".into())),
        }
    }

    fn on_results(&mut self, job: JobId, attempt: u32, frame: &[u8], now: u64, kv: &mut Kv) {
        let state = &self.jobs[&job];
        if state.phase != JobPhase::InFlight || state.attempt != attempt {
            self.metrics.stale_frames += 1;
            kv.push(("result", "stale".into()));
            return;
        }
        let (files, status) = match decode_results(frame) {
            Ok(decoded) => decoded,
            Err(e) => {
                kv.push(("result", format!("undecodable:{}", protocol_code(&e))));
                return;
            }
        };
        let from = ServerRef::new(status.network.clone(), status.server.clone());
        if state.assignment.as_ref() != Some(&from) || status.app != state.request.app {
            self.metrics.stale_frames += 1;
            kv.push(("result", "stale".into()));
            return;
        }
        let expected = state.request.n_files;
        let received = u32::try_from(files.len()).unwrap_or(u32::MAX).min(expected);
        let external_ip = state.request.external_ip.clone();
        let arrival_time = state.request.arrival_time;
        if let Some(row) = state.log_row {
            self.log.records[row].n_files_received = received;
        }
        if let Some(rec) = self.monitor.active.get_mut(&job) {
            rec.n_files_received = received;
        }
        if received < expected {
            kv.push(("result", format!("partial:{received}/{expected}")));
            return;
        }
        let dir = self.outputs.entry(external_ip).or_default();
        for f in files {
            dir.insert(f.name, f.content);
        }
        *self.store_counts.entry(job.clone()).or_default() += 1;
        if let Err(e) = release_server(&mut self.map, &status) {
            kv.push(("release", protocol_code(&e).into()));
        }
        self.monitor.active.remove(&job);
        let state = self.jobs.get_mut(&job).expect("known job");
        state.phase = JobPhase::Completed;
        state.completed_at = Some(now);
        if let Some(u) = state.update.clone() {
            self.tx.enqueue(u);
        }
        self.metrics.jobs_completed += 1;
        self.metrics.completion_times.push(CompletionTime { job_id: job, arrival_time, completed_at: now });
        kv.push(("result", format!("completed:{received}")));
        self.retry_deferred(now, kv);
    }

    fn on_monitor_tick(&mut self, periodic: bool, now: u64, kv: &mut Kv) {
        kv.push(("periodic", u8::from(periodic).to_string()));
        let shifts = self.monitor.tick(&mut self.map, &self.requests, now);
        for shift in shifts {
            self.metrics.failovers += 1;
            let failed = shift.failed.as_ref().map_or_else(|| "-".to_string(), ServerRef::to_string);
            kv.push(("missing", format!("{}@{failed}:{}", shift.job_id, shift.reason)));
            if let Some(server) = shift.failed {
                self.queue.schedule(now + self.params.timeout_t, EventKind::Heal { server });
            }
            self.jobs.get_mut(&shift.job_id).expect("known job").assignment = None;
            match shift.outcome {
                ShiftOutcome::Reassigned { decision } => self.start_attempt(&shift.job_id, decision, now, kv),
                ShiftOutcome::NoCapacity => self.defer_or_give_up(&shift.job_id, now, now, kv),
            }
        }
        self.retry_deferred(now, kv);
        if periodic {
            self.propagate(kv);
            if self.pending_work() {
                let next = self.monitor.next_periodic_tick(now);
                self.queue.schedule(next, EventKind::MonitorTick { periodic: true });
            }
        }
    }

    fn propagate(&mut self, kv: &mut Kv) {
        let popped = self.tx.drain();
        if popped.is_empty() {
            return;
        }
        self.metrics.queue_order_violations += order_violations(&popped) as u64;
        for u in &popped {
            let origin = u.serving_network.as_str();
            let intra = self.replicas.propagate_intra(&self.map, origin, u);
            let inter = self.replicas.propagate_inter(&self.map, origin, u);
            if intra.is_err() || inter.is_err() {
                kv.push(("propagate_error", u.job_id.to_string()));
            }
            self.metrics.propagation_rounds += 1;
        }
        kv.push(("propagated", popped.len().to_string()));
    }

    fn retry_deferred(&mut self, now: u64, kv: &mut Kv) {
        for job in self.deferred.clone() {
            if matches!(self.jobs[&job].phase, JobPhase::Deferred { .. }) {
                self.attempt_dispatch(&job, now, kv);
            }
        }
    }

    fn pending_work(&self) -> bool {
        !self.tx.is_empty()
            || self
                .jobs
                .values()
                .any(|j| matches!(j.phase, JobPhase::Pending | JobPhase::Deferred { .. } | JobPhase::InFlight))
    }

    fn on_crash(&mut self, server: ServerRef, kv: &mut Kv) {
        kv.push(("server", server.to_string()));
        self.endpoints.get_mut(&server).expect("validated by plan").crash();
        let _ = self.map.set_active(server.network.as_str(), server.server.as_str(), false);
    }

    /// Reactivation probe after a load shift; crashed servers stay down.
    fn on_heal(&mut self, server: ServerRef, now: u64, kv: &mut Kv) {
        kv.push(("server", server.to_string()));
        if self.endpoints[&server].is_up() {
            let _ = self.map.set_active(server.network.as_str(), server.server.as_str(), true);
            kv.push(("healed", "1".into()));
            self.retry_deferred(now, kv);
        } else {
            kv.push(("healed", "0".into()));
        }
    }
}

fn error_code(e: &DispatchError) -> &'static str {
    match e {
        DispatchError::NoCapacity(_) => "no_capacity",
        DispatchError::NoFreeServer(_) => "no_free_server",
        DispatchError::MalformedIp(_) => "malformed_ip",
        DispatchError::EmptyTable => "empty_table",
        DispatchError::Catalog(_) => "catalog",
        DispatchError::Workload(_) => "workload",
    }
}

fn protocol_code(e: &crate::protocol::ProtocolError) -> &'static str {
    use crate::protocol::ProtocolError as P;
    match e {
        P::Frame(_) => "frame",
        P::Truncated => "truncated",
        P::LengthMismatch => "length_mismatch",
        P::ExecutorFailure(_) => "executor_failure",
        P::InvalidFileName(_) => "invalid_file_name",
        P::Io(_) => "io",
        P::Catalog(_) => "catalog",
    }
}

/// Runs one scenario to quiescence (or `max_ticks`).
pub fn run_scenario(topology: NsMap, workload: Vec<JobRequest>, plan: FaultPlan, params: SimParams) -> Result<Metrics, SimError> {
    let mut sim = Simulation::new(topology, workload, plan, params)?;
    sim.run();
    Ok(sim.into_metrics())
}

/// Servers that host `app`, in map order.
pub fn hosting_servers(map: &NsMap, app: &crate::ids::ApplicationId) -> BTreeSet<ServerRef> {
    map.server_refs().filter(|(_, s)| s.hosts(app)).map(|(r, _)| r).collect()
}
