//! Control-plane paths from every LEO switch to the controller that serves it.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::constellation::{angle_between, NetworkSnapshot, NodeId, Role, EARTH_RADIUS_KM, SPEED_OF_LIGHT_KM_S};
use crate::error::{Error, Result};
use crate::partition::DomainAssignment;
use crate::visibility::Coverage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkClass {
    Isl,
    MeoLeo,
    GroundLeo,
    InterController,
}

impl LinkClass {
    /// Class of the direct link between a controller and a LEO.
    pub fn controller_link(role: Role) -> Self {
        match role {
            Role::Ground => LinkClass::GroundLeo,
            Role::Meo => LinkClass::MeoLeo,
            Role::Leo => LinkClass::Isl,
        }
    }
}

/// Link bandwidths in bits per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBandwidths {
    #[serde(default = "default_isl")]
    pub isl_bps: f64,
    #[serde(default = "default_meo_leo")]
    pub meo_leo_bps: f64,
    #[serde(default = "default_gs_leo")]
    pub gs_leo_bps: f64,
    #[serde(default = "default_controller")]
    pub controller_bps: f64,
}

fn default_isl() -> f64 {
    1e9
}
fn default_meo_leo() -> f64 {
    5e8
}
fn default_gs_leo() -> f64 {
    1e9
}
fn default_controller() -> f64 {
    1e10
}

impl Default for LinkBandwidths {
    fn default() -> Self {
        Self {
            isl_bps: default_isl(),
            meo_leo_bps: default_meo_leo(),
            gs_leo_bps: default_gs_leo(),
            controller_bps: default_controller(),
        }
    }
}

impl LinkBandwidths {
    pub fn uniform(bps: f64) -> Self {
        Self { isl_bps: bps, meo_leo_bps: bps, gs_leo_bps: bps, controller_bps: bps }
    }

    pub fn get(&self, class: LinkClass) -> f64 {
        match class {
            LinkClass::Isl => self.isl_bps,
            LinkClass::MeoLeo => self.meo_leo_bps,
            LinkClass::GroundLeo => self.gs_leo_bps,
            LinkClass::InterController => self.controller_bps,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            isl_bps: self.isl_bps * factor,
            meo_leo_bps: self.meo_leo_bps * factor,
            gs_leo_bps: self.gs_leo_bps * factor,
            controller_bps: self.controller_bps * factor,
        }
    }
}

/// Transmission plus propagation time of `bytes` over one link.
pub fn hop_delay(bytes: f64, bandwidth_bps: f64, distance_km: f64) -> f64 {
    8.0 * bytes / bandwidth_bps + distance_km / SPEED_OF_LIGHT_KM_S
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub from: NodeId,
    pub to: NodeId,
    pub class: LinkClass,
    pub distance_km: f64,
}

impl Hop {
    pub fn delay(&self, bytes: f64, links: &LinkBandwidths) -> f64 {
        hop_delay(bytes, links.get(self.class), self.distance_km)
    }
}

/// Hops from a LEO to the controller that answers its requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPath {
    pub controller: NodeId,
    pub hops: Vec<Hop>,
}

impl ControlPath {
    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    /// Store-and-forward delay of one `bytes`-sized message along the path.
    pub fn delay(&self, bytes: f64, links: &LinkBandwidths) -> f64 {
        self.hops.iter().map(|h| h.delay(bytes, links)).sum()
    }
}

/// Distance between two controllers: surface distance for terrestrial
/// backhaul, straight line otherwise.
pub fn controller_distance_km(snapshot: &NetworkSnapshot, a: NodeId, b: NodeId) -> f64 {
    if snapshot.role(a) == Role::Ground && snapshot.role(b) == Role::Ground {
        EARTH_RADIUS_KM * angle_between(snapshot.position(a), snapshot.position(b))
    } else {
        snapshot.distance_km(a, b)
    }
}

/// Control paths for every LEO in the snapshot.
///
/// A managed LEO with a direct link to its controller uses it. Otherwise the
/// request crosses intra-domain ISLs to the nearest member that has a direct
/// link. In a domain whose FOV constraint is waived the request may cross any
/// ISL to the nearest LEO seen by a controller of the same kind, and is then
/// backhauled to the domain controller. LEOs outside every FOV relay over
/// ISLs to the nearest managed LEO and are served by its controller.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRoutes {
    paths: BTreeMap<NodeId, ControlPath>,
}

impl ControlRoutes {
    pub fn build(snapshot: &NetworkSnapshot, coverage: &Coverage, assignment: &DomainAssignment) -> Result<Self> {
        let mut paths = BTreeMap::new();
        for (controller, members) in assignment.domains() {
            let in_domain = |n: NodeId| assignment.controller_of(n) == Some(controller);
            let waived = assignment.fov_waived;
            let role = snapshot.role(controller);
            // Gateways and the controller each one exits through.
            let mut gateways: Vec<(NodeId, NodeId)> = Vec::new();
            for &leo in &members {
                if coverage.covers(controller, leo) {
                    gateways.push((leo, controller));
                } else if waived {
                    let exit = coverage.coverers(leo).iter().copied().filter(|&k| snapshot.role(k) == role).min_by(
                        |&a, &b| snapshot.distance_km(leo, a).total_cmp(&snapshot.distance_km(leo, b)).then(a.cmp(&b)),
                    );
                    if let Some(exit) = exit {
                        gateways.push((leo, exit));
                    }
                }
            }
            let exits: BTreeMap<NodeId, NodeId> = gateways.iter().copied().collect();
            let sources: Vec<NodeId> = gateways.iter().map(|&(g, _)| g).collect();
            let parent = multi_source_bfs(snapshot, &sources, |n| waived || in_domain(n));
            for &leo in &members {
                let chain = trace(&parent, leo).ok_or(Error::DisconnectedDomain(leo))?;
                let gateway = *chain.last().expect("chain holds at least the start node");
                let exit = exits[&gateway];
                let mut hops = isl_hops(snapshot, &chain);
                hops.push(Hop {
                    from: gateway,
                    to: exit,
                    class: LinkClass::controller_link(snapshot.role(exit)),
                    distance_km: snapshot.distance_km(gateway, exit),
                });
                if exit != controller {
                    hops.push(Hop {
                        from: exit,
                        to: controller,
                        class: LinkClass::InterController,
                        distance_km: controller_distance_km(snapshot, exit, controller),
                    });
                }
                paths.insert(leo, ControlPath { controller, hops });
            }
        }
        if !assignment.unmanaged.is_empty() {
            let managed: Vec<NodeId> = assignment.domain_of.keys().copied().collect();
            let parent = multi_source_bfs(snapshot, &managed, |_| true);
            for &leo in &assignment.unmanaged {
                let chain = trace(&parent, leo).ok_or(Error::DisconnectedDomain(leo))?;
                let proxy = *chain.last().expect("chain holds at least the start node");
                let tail = &paths[&proxy];
                let mut hops = isl_hops(snapshot, &chain);
                hops.extend(tail.hops.iter().copied());
                let controller = tail.controller;
                paths.insert(leo, ControlPath { controller, hops });
            }
        }
        Ok(Self { paths })
    }

    pub fn path(&self, leo: NodeId) -> Option<&ControlPath> {
        self.paths.get(&leo)
    }

    /// Controller that answers requests from `leo`, including relayed LEOs.
    pub fn effective_controller(&self, leo: NodeId) -> Option<NodeId> {
        self.paths.get(&leo).map(|p| p.controller)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &ControlPath)> {
        self.paths.iter().map(|(&l, p)| (l, p))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Number of control hops from `leo` to its controller.
pub fn control_hops(
    leo: NodeId,
    assignment: &DomainAssignment,
    snapshot: &NetworkSnapshot,
    coverage: &Coverage,
) -> Result<usize> {
    let routes = ControlRoutes::build(snapshot, coverage, assignment)?;
    routes.path(leo).map(ControlPath::hop_count).ok_or(Error::DisconnectedDomain(leo))
}

fn isl_hops(snapshot: &NetworkSnapshot, chain: &[NodeId]) -> Vec<Hop> {
    chain
        .windows(2)
        .map(|w| Hop { from: w[0], to: w[1], class: LinkClass::Isl, distance_km: snapshot.distance_km(w[0], w[1]) })
        .collect()
}

/// BFS from all `sources` at once over ISLs between nodes accepted by
/// `allowed`. Each reached node points at its predecessor toward the nearest
/// source; sources point at themselves. Ties resolve to lower ids because
/// sources and neighbour lists are visited in ascending order.
fn multi_source_bfs(
    snapshot: &NetworkSnapshot,
    sources: &[NodeId],
    allowed: impl Fn(NodeId) -> bool,
) -> Vec<Option<NodeId>> {
    let mut parent = vec![None; snapshot.roles.len()];
    let mut queue = VecDeque::new();
    let mut sorted = sources.to_vec();
    sorted.sort_unstable();
    for s in sorted {
        if parent[s.index()].is_none() {
            parent[s.index()] = Some(s);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &v in snapshot.neighbors(u) {
            if parent[v.index()].is_none() && allowed(v) {
                parent[v.index()] = Some(u);
                queue.push_back(v);
            }
        }
    }
    parent
}

/// Node chain from `start` to the source that reached it.
fn trace(parent: &[Option<NodeId>], start: NodeId) -> Option<Vec<NodeId>> {
    let mut chain = vec![start];
    let mut cur = start;
    loop {
        let p = parent[cur.index()]?;
        if p == cur {
            return Some(chain);
        }
        chain.push(p);
        cur = p;
    }
}

/// Shortest ISL path between two LEOs, inclusive of both ends.
pub fn shortest_path(snapshot: &NetworkSnapshot, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
    let parent = multi_source_bfs(snapshot, &[dst], |_| true);
    trace(&parent, src)
}
