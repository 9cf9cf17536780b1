//! Domain assignments, their constraint checks, and the partitioning
//! strategies: the three-step partitioner, a centralized single-domain
//! baseline, a greedy nearest-controller baseline and an exhaustive oracle.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constellation::{NetworkSnapshot, NodeId};
use crate::error::{Error, Result};
use crate::visibility::Coverage;

mod baselines;
mod brute;
mod eigen;
mod finetune;
mod hungarian;
mod kmeans;
mod pipeline;
mod spectral;

pub use baselines::{central_controller, greedy_partition, greedy_partition_with_cap, odc_partition};
pub use brute::{brute_force_partition, BRUTE_FORCE_LIMIT};
pub use finetune::{fine_tune_boundaries, FineTuneOutcome};
pub use hungarian::{cluster_costs, km_match, km_match_relaxed, min_cost_assignment, CostMatrix};
pub use kmeans::kmeans;
pub use pipeline::{
    domain_sizes, partition_slot, step1_exclusive_assign, total_migrations, PartitionParams, PartitionStats, SlotInput,
    Step1,
};
pub use spectral::{
    laplacian, normalized_cut, spectral_cluster, spectral_embedding, spectral_labels, Cluster, SpectralLabels,
    SpectralOutcome,
};

/// Partitioning strategy selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Exclusive assignment, spectral clustering of overlap regions, optimal
    /// matching and movement-aware boundary tuning.
    #[serde(rename = "eunomia")]
    ThreeStep,
    /// One ground controller manages every LEO.
    #[serde(rename = "odc")]
    Centralized,
    /// Nearest visible controller with a load cap.
    #[serde(rename = "greedy")]
    Greedy,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::ThreeStep, Strategy::Centralized, Strategy::Greedy];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::ThreeStep => "eunomia",
            Strategy::Centralized => "odc",
            Strategy::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}; expected eunomia, odc or greedy")))
    }
}

/// Which controller manages each LEO in one time slot.
///
/// LEOs outside every controller's FOV cannot be managed directly; they are
/// listed in `unmanaged` and relay their control traffic through the nearest
/// managed LEO.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainAssignment {
    pub slot_index: usize,
    pub domain_of: BTreeMap<NodeId, NodeId>,
    #[serde(default)]
    pub unmanaged: BTreeSet<NodeId>,
    /// Set by the centralized baseline, which reaches LEOs outside its FOV
    /// through relays.
    #[serde(default)]
    pub fov_waived: bool,
}

impl DomainAssignment {
    pub fn new(slot_index: usize) -> Self {
        Self { slot_index, domain_of: BTreeMap::new(), unmanaged: BTreeSet::new(), fov_waived: false }
    }

    /// Builds an assignment from `(leo, controller)` id pairs.
    pub fn from_pairs(slot_index: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut a = Self::new(slot_index);
        for (l, k) in pairs {
            a.domain_of.insert(NodeId(l), NodeId(k));
        }
        a
    }

    pub fn controller_of(&self, leo: NodeId) -> Option<NodeId> {
        self.domain_of.get(&leo).copied()
    }

    pub fn assign(&mut self, leo: NodeId, controller: NodeId) {
        self.domain_of.insert(leo, controller);
    }

    /// Members of every active domain keyed by controller.
    pub fn domains(&self) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        let mut out: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for (&l, &k) in &self.domain_of {
            out.entry(k).or_default().insert(l);
        }
        out
    }

    pub fn members(&self, controller: NodeId) -> BTreeSet<NodeId> {
        self.domain_of.iter().filter(|(_, &k)| k == controller).map(|(&l, _)| l).collect()
    }

    pub fn active_controllers(&self) -> BTreeSet<NodeId> {
        self.domain_of.values().copied().collect()
    }

    pub fn domain_count(&self) -> usize {
        self.active_controllers().len()
    }

    /// Same-domain indicator.
    pub fn x(&self, i: NodeId, j: NodeId) -> bool {
        match (self.controller_of(i), self.controller_of(j)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    /// Domain-controller indicator: whether the domain containing `leo` is
    /// managed by `controller`.
    pub fn y(&self, leo: NodeId, controller: NodeId) -> bool {
        self.controller_of(leo) == Some(controller)
    }

    /// LEOs managed in both assignments whose controller differs.
    pub fn migrated_from(&self, prev: &DomainAssignment) -> Vec<NodeId> {
        self.domain_of.iter().filter(|(l, k)| prev.domain_of.get(l).is_some_and(|p| p != *k)).map(|(&l, _)| l).collect()
    }

    /// Writes `slot,leo_id,controller_id` rows; unmanaged LEOs get an empty
    /// controller field.
    pub fn write_csv<W: Write>(assignments: &[DomainAssignment], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "leo_id", "controller_id"])?;
        for a in assignments {
            let mut rows: Vec<(NodeId, Option<NodeId>)> = a.domain_of.iter().map(|(&l, &k)| (l, Some(k))).collect();
            rows.extend(a.unmanaged.iter().map(|&l| (l, None)));
            rows.sort();
            for (l, k) in rows {
                w.write_record([
                    a.slot_index.to_string(),
                    l.to_string(),
                    k.map(|k| k.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintFamily {
    DomainControl,
    SatelliteAssignment,
    Connectivity,
    Fov,
    Binary,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintFamily::DomainControl => "domain-control",
            ConstraintFamily::SatelliteAssignment => "satellite-assignment",
            ConstraintFamily::Connectivity => "connectivity",
            ConstraintFamily::Fov => "fov",
            ConstraintFamily::Binary => "binary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub family: ConstraintFamily,
    pub node: NodeId,
    pub detail: String,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at node {}: {}", self.family, self.node, self.detail)
    }
}

/// Checks the five constraint families and returns every violation found.
pub fn check_constraints(
    assignment: &DomainAssignment,
    snapshot: &NetworkSnapshot,
    coverage: &Coverage,
) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    let mut push = |family, node, detail: String| out.push(ConstraintViolation { family, node, detail });

    // One controller per domain: every domain key must be a controller.
    for k in assignment.active_controllers() {
        if k.index() >= snapshot.roles.len() || !snapshot.role(k).is_controller() {
            push(ConstraintFamily::DomainControl, k, "domain managed by a non-controller node".into());
        }
    }

    // Each LEO belongs to exactly one domain, or is unmanaged only when no
    // controller can see it.
    let leos: BTreeSet<NodeId> = snapshot.leo_ids.iter().copied().collect();
    for &l in &leos {
        let managed = assignment.domain_of.contains_key(&l);
        let unmanaged = assignment.unmanaged.contains(&l);
        match (managed, unmanaged) {
            (true, true) => push(ConstraintFamily::SatelliteAssignment, l, "both managed and unmanaged".into()),
            (false, false) => push(ConstraintFamily::SatelliteAssignment, l, "not assigned to any domain".into()),
            (false, true) if !coverage.coverers(l).is_empty() => {
                push(ConstraintFamily::SatelliteAssignment, l, "left unmanaged although a controller covers it".into())
            }
            _ => {}
        }
    }
    for &l in assignment.domain_of.keys().chain(&assignment.unmanaged) {
        if !leos.contains(&l) {
            push(ConstraintFamily::SatelliteAssignment, l, "assigned node is not a LEO".into());
        }
    }

    // FOV containment, waived for the centralized baseline.
    if !assignment.fov_waived {
        for (&l, &k) in &assignment.domain_of {
            if !coverage.covers(k, l) {
                push(ConstraintFamily::Fov, l, format!("outside the FOV of controller {k}"));
            }
        }
    }

    // Connectivity: every member reaches a member with a direct controller
    // link over intra-domain ISLs (over any ISL for a waived domain).
    for (k, members) in assignment.domains() {
        if k.index() >= snapshot.roles.len() {
            continue;
        }
        let kind = snapshot.role(k);
        let mut reached: BTreeSet<NodeId> = members
            .iter()
            .copied()
            .filter(|&l| {
                coverage.covers(k, l)
                    || (assignment.fov_waived && coverage.coverers(l).iter().any(|&c| snapshot.role(c) == kind))
            })
            .collect();
        let mut queue: VecDeque<NodeId> = reached.iter().copied().collect();
        while let Some(u) = queue.pop_front() {
            for &v in snapshot.neighbors(u) {
                let allowed = assignment.fov_waived || members.contains(&v);
                if allowed && reached.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        for &l in &members {
            if !reached.contains(&l) {
                push(ConstraintFamily::Connectivity, l, format!("cannot reach controller {k}"));
            }
        }
    }

    // Binary consistency between the membership view and the per-LEO view.
    for (k, members) in assignment.domains() {
        for &l in &members {
            if !assignment.y(l, k) {
                push(ConstraintFamily::Binary, l, format!("membership of domain {k} disagrees with y"));
            }
        }
        if let Some(&first) = members.iter().next() {
            for &l in &members {
                if !assignment.x(first, l) {
                    push(ConstraintFamily::Binary, l, format!("x inconsistent inside domain {k}"));
                }
            }
        }
    }
    out
}

/// Fails with every violation when the assignment is not valid.
pub fn validate(assignment: &DomainAssignment, snapshot: &NetworkSnapshot, coverage: &Coverage) -> Result<()> {
    let v = check_constraints(assignment, snapshot, coverage);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::ConstraintViolation(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_tags_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.tag().parse::<Strategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.tag()));
        }
        assert!("ilp".parse::<Strategy>().is_err());
    }

    #[test]
    fn indicator_views() {
        let a = DomainAssignment::from_pairs(3, [(0, 10), (1, 10), (2, 11)]);
        assert!(a.x(NodeId(0), NodeId(1)));
        assert!(!a.x(NodeId(0), NodeId(2)));
        assert!(a.y(NodeId(2), NodeId(11)));
        assert_eq!(a.domain_count(), 2);
        let b = DomainAssignment::from_pairs(4, [(0, 11), (1, 10), (2, 11)]);
        assert_eq!(b.migrated_from(&a), vec![NodeId(0)]);
    }

    #[test]
    fn csv_rows() {
        let mut a = DomainAssignment::from_pairs(1, [(1, 5), (0, 5)]);
        a.unmanaged.insert(NodeId(2));
        let mut buf = Vec::new();
        DomainAssignment::write_csv(&[a], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "slot,leo_id,controller_id\n1,0,5\n1,1,5\n1,2,\n");
    }
}
