//! Update propagation: first to every server of the serving network, then to
//! every related network (catalog similarity > 0) and all of its servers.
//!
//! Each server keeps a replica of the update history and of the access
//! frequency table derived from it. Applying an update is idempotent by job id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::catalog::{similarity_networks, CatalogError, NsMap};
use crate::ids::{JobId, NetworkId, ServerId, ServerRef};

use super::frequency::AccessFrequencyTable;
use super::queue::UpdateMessage;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Replica {
    pub updates: BTreeMap<JobId, UpdateMessage>,
    pub frequency: AccessFrequencyTable,
}

impl Replica {
    /// Returns `false` when the update was already held.
    pub fn apply(&mut self, u: &UpdateMessage) -> bool {
        if self.updates.contains_key(&u.job_id) {
            return false;
        }
        self.frequency.record_access(&u.app);
        self.updates.insert(u.job_id.clone(), u.clone());
        true
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReplicaStore {
    replicas: BTreeMap<ServerRef, Replica>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    /// Two servers of one network hold different histories.
    WithinNetwork { network: NetworkId, server: ServerId, reference: ServerId },
    /// A server holds an update it should not, or lacks one it should.
    Closure { server: ServerRef, job_id: JobId, holds: bool },
    /// A replica's frequency table disagrees with its own update history.
    Frequency { server: ServerRef },
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::WithinNetwork { network, server, reference } => {
                write!(f, "server {network}/{server} diverges from {network}/{reference}")
            }
            Divergence::Closure { server, job_id, holds: true } => {
                write!(f, "server {server} holds update {job_id} outside its propagation closure")
            }
            Divergence::Closure { server, job_id, holds: false } => {
                write!(f, "server {server} is missing update {job_id}")
            }
            Divergence::Frequency { server } => write!(f, "server {server} frequency table disagrees with its history"),
        }
    }
}

/// Networks whose catalog overlaps `origin`'s, excluding `origin`.
pub fn related_networks(map: &NsMap, origin: &str) -> Result<BTreeSet<NetworkId>, CatalogError> {
    let origin_net = map.network(origin)?;
    let origin_apps = origin_net.app_set();
    Ok(map
        .networks
        .iter()
        .filter(|n| n.id != origin_net.id)
        .filter(|n| !similarity_networks(&origin_apps, &n.app_set()).is_zero())
        .map(|n| n.id.clone())
        .collect())
}

impl ReplicaStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn replica(&self, server: &ServerRef) -> Option<&Replica> {
        self.replicas.get(server)
    }

    pub fn replica_mut(&mut self, server: &ServerRef) -> &mut Replica {
        self.replicas.entry(server.clone()).or_default()
    }

    pub fn holders(&self, job_id: &JobId) -> BTreeSet<ServerRef> {
        self.replicas
            .iter()
            .filter(|(_, r)| r.updates.contains_key(job_id))
            .map(|(s, _)| s.clone())
            .collect()
    }

    /// Delivers `u` to every server of `net`; returns the ids reached.
    pub fn propagate_intra(&mut self, map: &NsMap, net: &str, u: &UpdateMessage) -> Result<BTreeSet<ServerId>, CatalogError> {
        let network = map.network(net)?;
        let mut reached = BTreeSet::new();
        for srv in &network.servers {
            self.replica_mut(&ServerRef::new(network.id.clone(), srv.id.clone())).apply(u);
            reached.insert(srv.id.clone());
        }
        Ok(reached)
    }

    /// Delivers `u` to every related network of `origin` and, within each, to all servers.
    pub fn propagate_inter(&mut self, map: &NsMap, origin: &str, u: &UpdateMessage) -> Result<BTreeSet<NetworkId>, CatalogError> {
        let related = related_networks(map, origin)?;
        for net in &related {
            self.propagate_intra(map, net.as_str(), u)?;
        }
        Ok(related)
    }

    /// Checks, for a quiescent store, that servers of one network agree, that
    /// every update sits on exactly its origin's closure, and that frequency
    /// tables match histories.
    pub fn consistency(&self, map: &NsMap) -> Result<(), Divergence> {
        let empty = Replica::default();
        for net in &map.networks {
            let mut servers = net.servers.iter();
            let Some(first) = servers.next() else { continue };
            let reference = self.replicas.get(&ServerRef::new(net.id.clone(), first.id.clone())).unwrap_or(&empty);
            for srv in servers {
                let r = self.replicas.get(&ServerRef::new(net.id.clone(), srv.id.clone())).unwrap_or(&empty);
                if r != reference {
                    return Err(Divergence::WithinNetwork {
                        network: net.id.clone(),
                        server: srv.id.clone(),
                        reference: first.id.clone(),
                    });
                }
            }
        }

        let mut all_updates: BTreeMap<&JobId, &UpdateMessage> = BTreeMap::new();
        for r in self.replicas.values() {
            for (job, u) in &r.updates {
                all_updates.entry(job).or_insert(u);
            }
        }
        for (job, u) in all_updates {
            let mut expected = BTreeSet::new();
            let origin = u.serving_network.as_str();
            let mut nets = related_networks(map, origin).unwrap_or_default();
            nets.insert(u.serving_network.clone());
            for n in nets {
                if let Ok(net) = map.network(n.as_str()) {
                    expected.extend(net.servers.iter().map(|s| ServerRef::new(net.id.clone(), s.id.clone())));
                }
            }
            let holders = self.holders(job);
            if let Some(extra) = holders.difference(&expected).next() {
                return Err(Divergence::Closure { server: extra.clone(), job_id: job.clone(), holds: true });
            }
            if let Some(missing) = expected.difference(&holders).next() {
                return Err(Divergence::Closure { server: missing.clone(), job_id: job.clone(), holds: false });
            }
        }

        for (server, r) in &self.replicas {
            let mut rebuilt = AccessFrequencyTable::new();
            for u in r.updates.values() {
                rebuilt.record_access(&u.app);
            }
            if rebuilt != r.frequency {
                return Err(Divergence::Frequency { server: server.clone() });
            }
        }
        Ok(())
    }
}
