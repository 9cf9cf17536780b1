//! Elevation geometry, controller field-of-view domains, overlap regions and
//! topology-stable time slots.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::constellation::{angle_between, Network, NetworkSnapshot, NodeId, Role, Vec3};
use crate::error::{Error, Result};

/// Elevation (degrees) of `target` above the local horizon of `observer`,
/// both given as geocentric vectors.
///
/// With the geocentric angle `a` between the vectors and `rho = |observer| /
/// |target|`, the elevation is `atan2(cos a - rho, sin a)`.
pub fn elevation_angle(observer: &Vec3, target: &Vec3) -> f64 {
    let ro = observer.norm();
    let rt = target.norm();
    assert!(ro > 0.0 && rt > 0.0, "elevation undefined for a zero vector");
    let geocentric = angle_between(observer, target);
    if geocentric == 0.0 {
        return 90.0;
    }
    let rho = ro / rt;
    (geocentric.cos() - rho).atan2(geocentric.sin()).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Minimum elevation of a MEO controller as seen from the LEO.
    #[serde(default = "default_meo_elevation")]
    pub meo_min_elevation_deg: f64,
    /// Ground-station mask angle as seen from the station.
    #[serde(default)]
    pub gs_min_elevation_deg: f64,
}

fn default_meo_elevation() -> f64 {
    40.0
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { meo_min_elevation_deg: 40.0, gs_min_elevation_deg: 0.0 }
    }
}

impl Thresholds {
    pub fn for_role(&self, role: Role) -> f64 {
        match role {
            Role::Meo => self.meo_min_elevation_deg,
            Role::Ground => self.gs_min_elevation_deg,
            // LEO controllers are not modelled; treat them as needing a clear
            // line of sight.
            Role::Leo => 0.0,
        }
    }
}

/// Elevation of the controller/LEO link measured at the lower endpoint: at
/// the LEO for MEO controllers, at the station for ground controllers.
pub fn link_elevation(snapshot: &NetworkSnapshot, controller: NodeId, leo: NodeId) -> f64 {
    let c = snapshot.position(controller);
    let l = snapshot.position(leo);
    match snapshot.role(controller) {
        Role::Ground => elevation_angle(c, l),
        _ => elevation_angle(l, c),
    }
}

pub fn in_fov(snapshot: &NetworkSnapshot, thresholds: &Thresholds, controller: NodeId, leo: NodeId) -> bool {
    link_elevation(snapshot, controller, leo) >= thresholds.for_role(snapshot.role(controller))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FovDomain {
    pub controller_id: NodeId,
    pub member_leo_ids: BTreeSet<NodeId>,
}

/// FOV domains of every controller plus the inverse map from each LEO to the
/// controllers that see it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coverage {
    domains: Vec<FovDomain>,
    coverers: BTreeMap<NodeId, Vec<NodeId>>,
}

impl Coverage {
    pub fn from_domains(leo_ids: &[NodeId], mut domains: Vec<FovDomain>) -> Self {
        domains.sort_by_key(|d| d.controller_id);
        let mut coverers: BTreeMap<NodeId, Vec<NodeId>> = leo_ids.iter().map(|&l| (l, Vec::new())).collect();
        for d in &domains {
            for &leo in &d.member_leo_ids {
                coverers.entry(leo).or_default().push(d.controller_id);
            }
        }
        Self { domains, coverers }
    }

    pub fn domains(&self) -> &[FovDomain] {
        &self.domains
    }

    pub fn domain(&self, controller: NodeId) -> Option<&FovDomain> {
        self.domains.binary_search_by_key(&controller, |d| d.controller_id).ok().map(|i| &self.domains[i])
    }

    /// Controllers seeing `leo`, ascending by id.
    pub fn coverers(&self, leo: NodeId) -> &[NodeId] {
        self.coverers.get(&leo).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn covers(&self, controller: NodeId, leo: NodeId) -> bool {
        self.coverers(leo).binary_search(&controller).is_ok()
    }

    pub fn leo_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.coverers.keys().copied()
    }

    pub fn uncovered(&self) -> Vec<NodeId> {
        self.coverers.iter().filter(|(_, c)| c.is_empty()).map(|(&l, _)| l).collect()
    }

    pub fn multiply_covered(&self) -> Vec<NodeId> {
        self.coverers.iter().filter(|(_, c)| c.len() >= 2).map(|(&l, _)| l).collect()
    }
}

pub fn compute_fov_domains(snapshot: &NetworkSnapshot, thresholds: &Thresholds) -> Coverage {
    let domains = snapshot
        .controller_ids
        .iter()
        .map(|&k| FovDomain {
            controller_id: k,
            member_leo_ids: snapshot
                .leo_ids
                .iter()
                .copied()
                .filter(|&leo| in_fov(snapshot, thresholds, k, leo))
                .collect(),
        })
        .collect();
    Coverage::from_domains(&snapshot.leo_ids, domains)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapRegion {
    pub leo_ids: BTreeSet<NodeId>,
    pub competing_controller_ids: Vec<NodeId>,
}

impl OverlapRegion {
    pub fn m(&self) -> usize {
        self.competing_controller_ids.len()
    }
}

/// Groups multiply-covered LEOs into regions: two such LEOs share a region
/// when a chain of ISL links between multiply-covered LEOs with intersecting
/// coverer sets joins them.
pub fn compute_overlap_regions(coverage: &Coverage, snapshot: &NetworkSnapshot) -> Vec<OverlapRegion> {
    let contested = coverage.multiply_covered();
    let index: BTreeMap<NodeId, usize> = contested.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut parent: Vec<usize> = (0..contested.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, &leo) in contested.iter().enumerate() {
        for nb in snapshot.neighbors(leo) {
            let Some(&j) = index.get(nb) else { continue };
            if j <= i {
                continue;
            }
            let a = coverage.coverers(leo);
            let b = coverage.coverers(*nb);
            if a.iter().any(|k| b.binary_search(k).is_ok()) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
    for (i, &leo) in contested.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().insert(leo);
    }
    groups
        .into_values()
        .map(|leo_ids| {
            let controllers: BTreeSet<NodeId> =
                leo_ids.iter().flat_map(|&l| coverage.coverers(l).iter().copied()).collect();
            OverlapRegion { leo_ids, competing_controller_ids: controllers.into_iter().collect() }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TimeSlot {
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub snapshot: NetworkSnapshot,
    pub coverage: Coverage,
}

impl TimeSlot {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Samples the network every `step` seconds over `[0, horizon)` and opens a
/// new slot at every sample whose FOV membership differs from the current
/// slot's.
pub fn segment_time_slots(
    network: &Network,
    thresholds: &Thresholds,
    horizon: f64,
    step: f64,
) -> Result<Vec<TimeSlot>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidSampling(format!("step must be positive, got {step}")));
    }
    if !(horizon >= step) || !horizon.is_finite() {
        return Err(Error::InvalidSampling(format!("horizon {horizon} s is shorter than one step of {step} s")));
    }
    let mut slots: Vec<TimeSlot> = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * step;
        if t >= horizon {
            break;
        }
        let snapshot = network.snapshot(t);
        let coverage = compute_fov_domains(&snapshot, thresholds);
        let changed = slots.last().is_none_or(|s| s.coverage != coverage);
        if changed {
            if let Some(last) = slots.last_mut() {
                last.end = t;
            }
            slots.push(TimeSlot { index: slots.len(), start: t, end: horizon, snapshot, coverage });
        }
        k += 1;
    }
    Ok(slots)
}
