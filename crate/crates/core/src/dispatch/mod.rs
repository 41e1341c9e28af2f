//! Request routing: pick the nearest admissible network, then the nearest
//! free server inside it, account the access, and emit the update that the
//! serving server will propagate once the job finishes.
//!
//! The interface-level composition is interface → network → server: the
//! request is offered to the hosting networks in preference order and each
//! network offers it to its own servers.

pub mod frequency;
pub mod propagate;
pub mod queue;
pub mod seed;
pub mod select;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, NsMap};
use crate::ids::{parse_ipv4, ApplicationId, JobId, NetworkId, ServerId, ServerRef, UserId};
use crate::ratio::Ratio;

pub use frequency::AccessFrequencyTable;
pub use propagate::{related_networks, Divergence, Replica, ReplicaStore};
pub use queue::{order_violations, transmission_order, TransmissionQueue, UpdateMessage};
pub use seed::{combine_seeds, fnv1a64, request_key, seed_from_ip, seed_from_user};
pub use select::{
    candidate_networks, network_preference, select_network, select_server, select_server_excluding, NetworkCandidate,
    NetworkChoice, ServerChoice,
};

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("no admissible network can run `{0}`")]
    NoCapacity(ApplicationId),
    #[error("no free server in network `{0}`")]
    NoFreeServer(NetworkId),
    #[error("malformed IPv4 address `{0}`")]
    MalformedIp(String),
    #[error("access frequency table is empty")]
    EmptyTable,
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("workload error: {0}")]
    Workload(String),
}

/// One user submission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    pub job_id: JobId,
    pub user_id: UserId,
    pub external_ip: String,
    pub app: ApplicationId,
    pub n_files: u32,
    pub arrival_time: u64,
    #[serde(with = "payload_text")]
    pub payload: Vec<u8>,
}

mod payload_text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&String::from_utf8_lossy(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        Ok(String::deserialize(d)?.into_bytes())
    }
}

impl JobRequest {
    pub fn validate(&self) -> Result<(), DispatchError> {
        if self.n_files == 0 {
            return Err(DispatchError::Workload(format!("job `{}` expects zero files", self.job_id)));
        }
        if parse_ipv4(&self.external_ip).is_none() {
            return Err(DispatchError::MalformedIp(self.external_ip.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadDoc {
    jobs: Vec<JobRequest>,
}

/// Parses a workload document; job ids must be unique.
pub fn load_workload(bytes: &[u8]) -> Result<Vec<JobRequest>, DispatchError> {
    let doc: WorkloadDoc = serde_json::from_slice(bytes).map_err(|e| DispatchError::Workload(e.to_string()))?;
    let mut seen = BTreeSet::new();
    for job in &doc.jobs {
        job.validate()?;
        if !seen.insert(job.job_id.clone()) {
            return Err(DispatchError::Workload(format!("duplicate job id `{}`", job.job_id)));
        }
    }
    Ok(doc.jobs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionDecision {
    pub network: NetworkId,
    pub server: ServerId,
    /// Nearness of the chosen network to the request.
    pub score: Ratio,
    /// Whether a seed-keyed tie-break decided the network or the server.
    pub tie_broken: bool,
}

impl SelectionDecision {
    pub fn server_ref(&self) -> ServerRef {
        ServerRef::new(self.network.clone(), self.server.clone())
    }
}

/// Chooses a network and a server without touching the map.
pub fn decide(map: &NsMap, req: &JobRequest, excluded: &BTreeSet<ServerRef>) -> Result<SelectionDecision, DispatchError> {
    for net in network_preference(map, req)? {
        match select_server_excluding(map, net.network.as_str(), req, excluded) {
            Ok(srv) => {
                return Ok(SelectionDecision {
                    network: net.network,
                    server: srv.server,
                    score: net.score,
                    tie_broken: net.tie_broken || srv.tie_broken,
                })
            }
            Err(DispatchError::NoFreeServer(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(DispatchError::NoCapacity(req.app.clone()))
}

/// Chooses a server avoiding `excluded` and takes a slot on it.
pub fn route(map: &mut NsMap, req: &JobRequest, excluded: &BTreeSet<ServerRef>) -> Result<SelectionDecision, DispatchError> {
    let decision = decide(map, req, excluded)?;
    map.occupy(decision.network.as_str(), decision.server.as_str())?;
    Ok(decision)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dispatched {
    pub decision: SelectionDecision,
    pub update: UpdateMessage,
}

/// Routes a fresh request, records the access and prepares its update message.
pub fn dispatch(map: &mut NsMap, req: &JobRequest, table: &mut AccessFrequencyTable, now: u64) -> Result<Dispatched, DispatchError> {
    let decision = route(map, req, &BTreeSet::new())?;
    table.record_access(&req.app);
    let frequency_at_send = table.access_frequency(&req.app)?;
    let update = UpdateMessage {
        job_id: req.job_id.clone(),
        app: req.app.clone(),
        external_ip: req.external_ip.clone(),
        serving_network: decision.network.clone(),
        serving_server: decision.server.clone(),
        created_at: now,
        frequency_at_send,
    };
    Ok(Dispatched { decision, update })
}

#[cfg(test)]
pub(crate) fn test_request(job: &str, user: &str, ip: &str, app: &str) -> JobRequest {
    JobRequest {
        job_id: JobId::new(job).unwrap(),
        user_id: UserId::new(user).unwrap(),
        external_ip: ip.to_string(),
        app: ApplicationId::new(app).unwrap(),
        n_files: 4,
        arrival_time: 0,
        payload: b"print(gcf,'-djpeg','normfar dB.jpg');".to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_topology;

    fn fixture() -> NsMap {
        load_topology(include_bytes!("../../fixtures/four_networks.json")).unwrap()
    }

    #[test]
    fn dispatch_app4_lands_on_n4_and_marks_busy() {
        let mut map = fixture();
        let mut table = AccessFrequencyTable::new();
        let req = test_request("j1", "u1", "10.20.30.40", "App4");
        let d = dispatch(&mut map, &req, &mut table, 7).unwrap();
        assert_eq!(d.decision.network.as_str(), "n4");
        assert!(["s2", "s3"].contains(&d.decision.server.as_str()));
        assert!(d.decision.tie_broken);
        assert!(map.server("n4", d.decision.server.as_str()).unwrap().busy);
        assert_eq!(map.network("n4").unwrap().current_load, 1);
        assert_eq!(d.update.frequency_at_send, Ratio::ONE);
        assert_eq!(d.update.created_at, 7);
        assert_eq!(table.total(), 1);
    }

    #[test]
    fn second_identical_request_goes_elsewhere() {
        let mut map = fixture();
        let mut table = AccessFrequencyTable::new();
        let req = test_request("j1", "u1", "10.20.30.40", "App4");
        let first = dispatch(&mut map, &req, &mut table, 0).unwrap().decision;
        let second = dispatch(&mut map, &req, &mut table, 0).unwrap().decision;
        assert_ne!(first.server_ref(), second.server_ref());
    }

    #[test]
    fn falls_back_to_next_network_when_no_server_free() {
        let mut map = fixture();
        for s in ["s2", "s3", "s4"] {
            map.set_active("n4", s, false).unwrap();
        }
        let req = test_request("j1", "u1", "10.20.30.40", "App4");
        let d = decide(&map, &req, &BTreeSet::new()).unwrap();
        assert_eq!(d.network.as_str(), "n1");
    }

    #[test]
    fn unhosted_app_is_no_capacity() {
        let mut map = fixture();
        let mut table = AccessFrequencyTable::new();
        let req = test_request("j1", "u1", "10.20.30.40", "matlab");
        assert!(matches!(dispatch(&mut map, &req, &mut table, 0), Err(DispatchError::NoCapacity(_))));
        assert_eq!(table.total(), 0);
    }

    #[test]
    fn decisions_are_deterministic_when_serialized() {
        let req = test_request("j1", "u1", "10.20.30.40", "App3");
        let run = || {
            let mut map = fixture();
            let mut table = AccessFrequencyTable::new();
            serde_json::to_string(&dispatch(&mut map, &req, &mut table, 0).unwrap()).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn workload_parsing() {
        let doc = br#"{"jobs":[{"job_id":"j1","user_id":"u1","external_ip":"10.20.30.40","app":"App4","n_files":4,"arrival_time":0,"payload":"x=1"}]}"#;
        let jobs = load_workload(doc).unwrap();
        assert_eq!(jobs[0].payload, b"x=1");
        let zero = br#"{"jobs":[{"job_id":"j1","user_id":"u1","external_ip":"10.20.30.40","app":"App4","n_files":0,"arrival_time":0,"payload":""}]}"#;
        assert!(load_workload(zero).is_err());
        let dup = br#"{"jobs":[
            {"job_id":"j1","user_id":"u1","external_ip":"10.20.30.40","app":"A","n_files":1,"arrival_time":0,"payload":""},
            {"job_id":"j1","user_id":"u1","external_ip":"10.20.30.40","app":"A","n_files":1,"arrival_time":0,"payload":""}]}"#;
        assert!(load_workload(dup).is_err());
        let bad_ip = br#"{"jobs":[{"job_id":"j1","user_id":"u1","external_ip":"10.20","app":"A","n_files":1,"arrival_time":0,"payload":""}]}"#;
        assert!(matches!(load_workload(bad_ip), Err(DispatchError::MalformedIp(_))));
    }
}
