//! Nearest-network and nearest-server selection.
//!
//! A network's nearness to a request is the similarity between the singleton
//! `{requested app}` and the network catalog; only hosting networks qualify.
//! Networks whose region matches the request's IP region rank first. A
//! server's nearness is the same measure over its own catalog. Exact ties are
//! broken by the request key modulo the size of the tied group.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::catalog::{similarity_networks, similarity_servers, AppSet, NsMap};
use crate::ids::{ApplicationId, NetworkId, ServerId, ServerRef};
use crate::ratio::Ratio;

use super::seed::request_key;
use super::{DispatchError, JobRequest};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkCandidate {
    pub network: NetworkId,
    pub score: Ratio,
    pub region_match: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkChoice {
    pub network: NetworkId,
    pub score: Ratio,
    pub tie_broken: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ServerChoice {
    pub server: ServerId,
    pub score: Ratio,
    pub tie_broken: bool,
}

fn singleton(app: &ApplicationId) -> AppSet {
    std::iter::once(app.clone()).collect()
}

/// Hosting networks ordered by (region match desc, score desc, id asc).
pub fn candidate_networks(map: &NsMap, app: &ApplicationId, request_region: Option<&str>) -> Vec<NetworkCandidate> {
    let wanted = singleton(app);
    let mut out: Vec<NetworkCandidate> = map
        .networks
        .iter()
        .filter_map(|net| {
            let apps = net.app_set();
            if !apps.contains(app) {
                return None;
            }
            let region_match = request_region.is_some() && net.region.as_deref() == request_region;
            Some(NetworkCandidate { network: net.id.clone(), score: similarity_networks(&wanted, &apps), region_match })
        })
        .collect();
    out.sort_by(|a, b| {
        b.region_match
            .cmp(&a.region_match)
            .then(b.score.cmp(&a.score))
            .then(a.network.cmp(&b.network))
    });
    out
}

/// Splits an already-ordered list into runs of equal rank and rotates each
/// run so that its `key % len`-th member comes first.
fn rotate_ties<T, K: PartialEq>(items: Vec<T>, rank: impl Fn(&T) -> K, key: u64) -> Vec<(T, bool)> {
    let mut out = Vec::with_capacity(items.len());
    let mut group: Vec<T> = Vec::new();
    let flush = |group: &mut Vec<T>, out: &mut Vec<(T, bool)>| {
        let len = group.len();
        if len == 0 {
            return;
        }
        group.rotate_left((key % len as u64) as usize);
        out.extend(group.drain(..).map(|item| (item, len > 1)));
    };
    for item in items {
        if let Some(last) = group.last() {
            if rank(last) != rank(&item) {
                flush(&mut group, &mut out);
            }
        }
        group.push(item);
    }
    flush(&mut group, &mut out);
    out
}

/// Admissible (under-threshold) hosting networks in the order the dispatcher tries them.
pub fn network_preference(map: &NsMap, req: &JobRequest) -> Result<Vec<NetworkChoice>, DispatchError> {
    let key = request_key(req.user_id.as_str(), &req.external_ip)?;
    let region = map.region_of(&req.external_ip);
    let admissible: Vec<NetworkCandidate> = candidate_networks(map, &req.app, region)
        .into_iter()
        .filter(|c| map.network(c.network.as_str()).map(|n| !n.is_saturated()).unwrap_or(false))
        .collect();
    Ok(rotate_ties(admissible, |c| (c.region_match, c.score), key)
        .into_iter()
        .map(|(c, tie_broken)| NetworkChoice { network: c.network, score: c.score, tie_broken })
        .collect())
}

pub fn select_network(map: &NsMap, req: &JobRequest) -> Result<NetworkChoice, DispatchError> {
    network_preference(map, req)?
        .into_iter()
        .next()
        .ok_or_else(|| DispatchError::NoCapacity(req.app.clone()))
}

pub fn select_server(map: &NsMap, net: &str, req: &JobRequest) -> Result<ServerChoice, DispatchError> {
    select_server_excluding(map, net, req, &BTreeSet::new())
}

/// Like [`select_server`] but never returns a server listed in `excluded`.
pub fn select_server_excluding(
    map: &NsMap,
    net: &str,
    req: &JobRequest,
    excluded: &BTreeSet<ServerRef>,
) -> Result<ServerChoice, DispatchError> {
    let network = map.network(net)?;
    let key = request_key(req.user_id.as_str(), &req.external_ip)?;
    let wanted = singleton(&req.app);
    let mut candidates: Vec<(ServerId, Ratio)> = network
        .servers
        .iter()
        .filter(|s| s.hosts(&req.app) && s.is_admissible())
        .filter(|s| !excluded.contains(&ServerRef::new(network.id.clone(), s.id.clone())))
        .map(|s| (s.id.clone(), similarity_servers(&wanted, &s.apps)))
        .collect();
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let top = candidates.first().map(|c| c.1);
    let Some(top) = top else {
        return Err(DispatchError::NoFreeServer(network.id.clone()));
    };
    let best: Vec<_> = candidates.into_iter().take_while(|c| c.1 == top).collect();
    let ((server, score), tie_broken) = rotate_ties(best, |c| c.1, key).into_iter().next().expect("non-empty group");
    Ok(ServerChoice { server, score, tie_broken })
}
