//! The network-server map (NS map) and the two catalog similarity measures.
//!
//! The map lists, for every network, its servers and the applications each
//! server hosts, together with the load counters and status flags that the
//! dispatcher consults. A network's catalog is the union of its servers'
//! catalogs. Similarity between two catalogs is the Jaccard ratio
//! `|a ∩ b| / |a ∪ b|` with `0/0 = 0`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{parse_ipv4, ApplicationId, NetworkId, ServerId, ServerRef};
use crate::ratio::Ratio;

pub type AppSet = BTreeSet<ApplicationId>;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown network `{0}`")]
    UnknownNetwork(String),
    #[error("unknown server `{server}` in network `{network}`")]
    UnknownServer { network: String, server: String },
    #[error("topology parse error: {0}")]
    Parse(String),
    #[error("topology validation error: {0}")]
    Validation(String),
    #[error("server {0} is not busy")]
    NotBusy(ServerRef),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ServerRecord {
    pub id: ServerId,
    pub internal_ip: String,
    pub apps: AppSet,
    pub active: bool,
    pub busy: bool,
    pub current_load: u32,
    pub threshold_load: u32,
}

impl ServerRecord {
    pub fn new(id: ServerId, internal_ip: impl Into<String>, threshold_load: u32, apps: AppSet) -> Self {
        Self {
            id,
            internal_ip: internal_ip.into(),
            apps,
            active: true,
            busy: false,
            current_load: 0,
            threshold_load,
        }
    }

    pub fn hosts(&self, app: &ApplicationId) -> bool {
        self.apps.contains(app)
    }

    /// Active, not busy and strictly under its threshold.
    pub fn is_admissible(&self) -> bool {
        self.active && !self.busy && self.current_load < self.threshold_load
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkRecord {
    pub id: NetworkId,
    pub region: Option<String>,
    pub servers: Vec<ServerRecord>,
    pub current_load: u32,
    pub threshold_load: u32,
}

impl NetworkRecord {
    pub fn new(id: NetworkId, region: Option<String>, threshold_load: u32) -> Self {
        Self { id, region, servers: Vec::new(), current_load: 0, threshold_load }
    }

    pub fn server(&self, id: &str) -> Option<&ServerRecord> {
        self.servers.iter().find(|s| s.id.as_str() == id)
    }

    pub fn is_saturated(&self) -> bool {
        self.current_load >= self.threshold_load
    }

    pub fn app_set(&self) -> AppSet {
        self.servers.iter().flat_map(|s| s.apps.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NsMap {
    pub networks: Vec<NetworkRecord>,
    pub ip_regions: BTreeMap<String, String>,
}

impl NsMap {
    pub fn new(networks: Vec<NetworkRecord>, ip_regions: BTreeMap<String, String>) -> Self {
        Self { networks, ip_regions }
    }

    pub fn network(&self, id: &str) -> Result<&NetworkRecord, CatalogError> {
        self.networks
            .iter()
            .find(|n| n.id.as_str() == id)
            .ok_or_else(|| CatalogError::UnknownNetwork(id.to_string()))
    }

    fn network_mut(&mut self, id: &str) -> Result<&mut NetworkRecord, CatalogError> {
        self.networks
            .iter_mut()
            .find(|n| n.id.as_str() == id)
            .ok_or_else(|| CatalogError::UnknownNetwork(id.to_string()))
    }

    pub fn server(&self, network: &str, server: &str) -> Result<&ServerRecord, CatalogError> {
        self.network(network)?.server(server).ok_or_else(|| CatalogError::UnknownServer {
            network: network.to_string(),
            server: server.to_string(),
        })
    }

    pub fn server_mut(&mut self, network: &str, server: &str) -> Result<&mut ServerRecord, CatalogError> {
        self.network_mut(network)?
            .servers
            .iter_mut()
            .find(|s| s.id.as_str() == server)
            .ok_or_else(|| CatalogError::UnknownServer {
                network: network.to_string(),
                server: server.to_string(),
            })
    }

    pub fn server_by_ip(&self, internal_ip: &str) -> Option<ServerRef> {
        self.networks.iter().find_map(|n| {
            n.servers
                .iter()
                .find(|s| s.internal_ip == internal_ip)
                .map(|s| ServerRef::new(n.id.clone(), s.id.clone()))
        })
    }

    /// Every server in map order.
    pub fn server_refs(&self) -> impl Iterator<Item = (ServerRef, &ServerRecord)> + '_ {
        self.networks
            .iter()
            .flat_map(|n| n.servers.iter().map(move |s| (ServerRef::new(n.id.clone(), s.id.clone()), s)))
    }

    /// Region of an external IP: the longest `ip_regions` prefix the address starts with.
    pub fn region_of(&self, external_ip: &str) -> Option<&str> {
        self.ip_regions
            .iter()
            .filter(|(prefix, _)| external_ip.starts_with(prefix.as_str()))
            .max_by_key(|(prefix, _)| prefix.len())
            .map(|(_, region)| region.as_str())
    }

    /// Takes one slot on the server and its network; sets `busy` once the
    /// server reaches its threshold.
    pub fn occupy(&mut self, network: &str, server: &str) -> Result<(), CatalogError> {
        let srv = self.server_mut(network, server)?;
        srv.current_load += 1;
        srv.busy = srv.current_load >= srv.threshold_load;
        self.network_mut(network)?.current_load += 1;
        Ok(())
    }

    /// Gives back one slot taken by [`NsMap::occupy`].
    pub fn release(&mut self, network: &str, server: &str) -> Result<(), CatalogError> {
        let srv = self.server_mut(network, server)?;
        if srv.current_load == 0 {
            return Err(CatalogError::NotBusy(ServerRef::new(
                NetworkId::new(network).expect("looked up id"),
                srv.id.clone(),
            )));
        }
        srv.current_load -= 1;
        srv.busy = false;
        let net = self.network_mut(network)?;
        net.current_load -= 1;
        Ok(())
    }

    pub fn set_active(&mut self, network: &str, server: &str, active: bool) -> Result<(), CatalogError> {
        self.server_mut(network, server)?.active = active;
        Ok(())
    }

    pub fn total_load(&self) -> u64 {
        self.networks.iter().map(|n| n.current_load as u64).sum()
    }

    pub fn busy_servers(&self) -> usize {
        self.networks.iter().flat_map(|n| &n.servers).filter(|s| s.busy).count()
    }

    /// Serializes back to the topology document shape (loads and flags are not part of it).
    pub fn to_document(&self) -> String {
        let doc = TopologyDoc {
            networks: self
                .networks
                .iter()
                .map(|n| NetworkDoc {
                    id: n.id.to_string(),
                    region: n.region.clone(),
                    threshold_load: n.threshold_load,
                    servers: n
                        .servers
                        .iter()
                        .map(|s| ServerDoc {
                            id: s.id.to_string(),
                            internal_ip: s.internal_ip.clone(),
                            threshold_load: s.threshold_load,
                            apps: s.apps.iter().map(|a| a.to_string()).collect(),
                        })
                        .collect(),
                })
                .collect(),
            ip_regions: self.ip_regions.clone(),
        };
        serde_json::to_string(&doc).expect("topology serializes")
    }
}

/// Union of the application catalogs of every server in `net`.
pub fn network_app_set(map: &NsMap, net: &str) -> Result<AppSet, CatalogError> {
    Ok(map.network(net)?.app_set())
}

pub fn server_app_set(map: &NsMap, net: &str, srv: &str) -> Result<AppSet, CatalogError> {
    Ok(map.server(net, srv)?.apps.clone())
}

/// Jaccard ratio of two sets; two empty sets score zero.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Ratio {
    let inter = a.intersection(b).count() as u64;
    let union = a.len() as u64 + b.len() as u64 - inter;
    Ratio::or_zero(inter, union)
}

/// Similarity between two network catalogs.
pub fn similarity_networks(a: &AppSet, b: &AppSet) -> Ratio {
    jaccard(a, b)
}

/// Similarity between two server catalogs. Same shape as [`similarity_networks`].
pub fn similarity_servers(a: &AppSet, b: &AppSet) -> Ratio {
    jaccard(a, b)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    networks: Vec<NetworkDoc>,
    #[serde(default)]
    ip_regions: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    region: Option<String>,
    threshold_load: u32,
    servers: Vec<ServerDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServerDoc {
    id: String,
    internal_ip: String,
    threshold_load: u32,
    apps: Vec<String>,
}

fn invalid(msg: impl Into<String>) -> CatalogError {
    CatalogError::Validation(msg.into())
}

/// Parses and validates a topology document. Network and server order is kept.
pub fn load_topology(bytes: &[u8]) -> Result<NsMap, CatalogError> {
    let doc: TopologyDoc = serde_json::from_slice(bytes).map_err(|e| CatalogError::Parse(e.to_string()))?;
    let mut networks = Vec::with_capacity(doc.networks.len());
    for n in doc.networks {
        let id = NetworkId::new(n.id).map_err(|e| invalid(e.to_string()))?;
        let mut net = NetworkRecord::new(id, n.region, n.threshold_load);
        for s in n.servers {
            let sid = ServerId::new(s.id).map_err(|e| invalid(e.to_string()))?;
            let apps = s
                .apps
                .into_iter()
                .map(ApplicationId::new)
                .collect::<Result<AppSet, _>>()
                .map_err(|e| invalid(e.to_string()))?;
            net.servers.push(ServerRecord::new(sid, s.internal_ip, s.threshold_load, apps));
        }
        networks.push(net);
    }
    let map = NsMap::new(networks, doc.ip_regions);
    validate_topology(&map)?;
    Ok(map)
}

/// Checks every structural and load invariant of the map, reporting the first violation.
pub fn validate_topology(map: &NsMap) -> Result<(), CatalogError> {
    let mut network_ids = BTreeSet::new();
    let mut ips = BTreeSet::new();
    for net in &map.networks {
        if !network_ids.insert(net.id.as_str()) {
            return Err(invalid(format!("duplicate network id `{}`", net.id)));
        }
        if net.threshold_load == 0 {
            return Err(invalid(format!("network `{}` has threshold_load 0", net.id)));
        }
        if let Some(region) = &net.region {
            if region.is_empty() || region.chars().any(char::is_whitespace) {
                return Err(invalid(format!("network `{}` has malformed region `{region}`", net.id)));
            }
        }
        let mut server_ids = BTreeSet::new();
        let mut load_sum: u64 = 0;
        for srv in &net.servers {
            if !server_ids.insert(srv.id.as_str()) {
                return Err(invalid(format!("duplicate server id `{}` in network `{}`", srv.id, net.id)));
            }
            if parse_ipv4(&srv.internal_ip).is_none() {
                return Err(invalid(format!("server `{}/{}` has malformed internal_ip `{}`", net.id, srv.id, srv.internal_ip)));
            }
            if !ips.insert(srv.internal_ip.as_str()) {
                return Err(invalid(format!("duplicate internal_ip `{}`", srv.internal_ip)));
            }
            if srv.threshold_load == 0 {
                return Err(invalid(format!("server `{}/{}` has threshold_load 0", net.id, srv.id)));
            }
            if srv.current_load > srv.threshold_load {
                return Err(invalid(format!("server `{}/{}` load exceeds threshold", net.id, srv.id)));
            }
            if srv.busy && srv.current_load == 0 {
                return Err(invalid(format!("server `{}/{}` is busy with zero load", net.id, srv.id)));
            }
            load_sum += srv.current_load as u64;
        }
        if load_sum != net.current_load as u64 {
            return Err(invalid(format!(
                "network `{}` load {} differs from server load sum {load_sum}",
                net.id, net.current_load
            )));
        }
    }
    for (prefix, region) in &map.ip_regions {
        if prefix.is_empty() || region.is_empty() || region.chars().any(char::is_whitespace) {
            return Err(invalid(format!("malformed ip_regions entry `{prefix}` -> `{region}`")));
        }
    }
    Ok(())
}
