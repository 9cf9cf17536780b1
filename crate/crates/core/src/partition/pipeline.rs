use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::constellation::{angle_between, NetworkSnapshot, NodeId};
use crate::corg::{build_corg, CorgParams};
use crate::error::Result;
use crate::overhead::OverheadParams;
use crate::traffic::TrafficMatrix;
use crate::visibility::{compute_overlap_regions, Coverage};

use super::finetune::fine_tune_boundaries;
use super::hungarian::km_match_relaxed;
use super::spectral::spectral_cluster;
use super::{validate, DomainAssignment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionParams {
    #[serde(default)]
    pub corg: CorgParams,
    /// How far ahead boundary tuning looks, in seconds.
    #[serde(default = "default_lookahead")]
    pub lookahead_s: f64,
    #[serde(default = "default_true")]
    pub fine_tune: bool,
    #[serde(default = "default_true")]
    pub inherit: bool,
    /// Greedy baseline load cap as a multiple of the mean domain size.
    #[serde(default = "default_cap")]
    pub greedy_cap_factor: f64,
}

fn default_lookahead() -> f64 {
    30.0
}
fn default_true() -> bool {
    true
}
fn default_cap() -> f64 {
    1.5
}

impl Default for PartitionParams {
    fn default() -> Self {
        Self {
            corg: CorgParams::default(),
            lookahead_s: default_lookahead(),
            fine_tune: true,
            inherit: true,
            greedy_cap_factor: default_cap(),
        }
    }
}

/// Inputs for partitioning one slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotInput<'a> {
    pub slot_index: usize,
    pub snapshot: &'a NetworkSnapshot,
    pub coverage: &'a Coverage,
    /// Coverage at the lookahead instant, used by boundary tuning.
    pub future: Option<&'a Coverage>,
    /// Traffic observed in the previous slot.
    pub traffic: &'a TrafficMatrix,
    /// Previous slot's assignment and coverage, used for inheritance.
    pub prev: Option<(&'a DomainAssignment, &'a Coverage)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub exclusive: usize,
    pub inherited: usize,
    pub clustered: usize,
    pub unmanaged: usize,
    pub regions: usize,
    pub largest_region: usize,
    pub fallback_regions: usize,
    pub fov_repairs: usize,
    pub spectral_retries: usize,
    pub fine_tune_moves: usize,
}

/// Result of the exclusive-assignment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step1 {
    /// LEOs seen by exactly one controller, assigned to it; LEOs seen by none
    /// are listed as unmanaged.
    pub assignment: DomainAssignment,
    /// LEOs seen by two or more controllers.
    pub pending: BTreeSet<NodeId>,
    pub uncoverable: Vec<NodeId>,
}

pub fn step1_exclusive_assign(slot_index: usize, coverage: &Coverage) -> Step1 {
    let mut assignment = DomainAssignment::new(slot_index);
    let mut pending = BTreeSet::new();
    let mut uncoverable = Vec::new();
    for leo in coverage.leo_ids() {
        match coverage.coverers(leo) {
            [] => {
                uncoverable.push(leo);
                assignment.unmanaged.insert(leo);
            }
            [only] => assignment.assign(leo, *only),
            _ => {
                pending.insert(leo);
            }
        }
    }
    Step1 { assignment, pending, uncoverable }
}

fn region_seed(seed: u64, first: NodeId) -> u64 {
    seed ^ (u64::from(first.0) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn nearest_coverer(leo: NodeId, snapshot: &NetworkSnapshot, coverage: &Coverage) -> Option<NodeId> {
    coverage.coverers(leo).iter().copied().min_by(|&a, &b| {
        let da = angle_between(snapshot.position(leo), snapshot.position(a));
        let db = angle_between(snapshot.position(leo), snapshot.position(b));
        da.total_cmp(&db).then(a.cmp(&b))
    })
}

/// Three-step partition of one slot: exclusive assignment, inheritance from
/// the previous slot, spectral clustering and optimal matching of each
/// overlap region, then movement-aware boundary tuning.
pub fn partition_slot(
    input: SlotInput<'_>,
    overhead: &OverheadParams,
    params: &PartitionParams,
    seed: u64,
) -> Result<(DomainAssignment, PartitionStats)> {
    params.corg.validate()?;
    let snapshot = input.snapshot;
    let coverage = input.coverage;
    let mut stats = PartitionStats::default();

    let Step1 { mut assignment, mut pending, uncoverable } = step1_exclusive_assign(input.slot_index, coverage);
    stats.unmanaged = uncoverable.len();
    stats.exclusive = assignment.domain_of.len();

    if params.inherit {
        if let Some((prev, prev_cov)) = input.prev {
            let keep: Vec<(NodeId, NodeId)> = pending
                .iter()
                .filter_map(|&l| {
                    let k = prev.controller_of(l)?;
                    (coverage.covers(k, l) && prev_cov.coverers(l) == coverage.coverers(l)).then_some((l, k))
                })
                .collect();
            for (l, k) in keep {
                assignment.assign(l, k);
                pending.remove(&l);
                stats.inherited += 1;
            }
        }
    }

    let regions = compute_overlap_regions(coverage, snapshot);
    for region in regions {
        let leos: BTreeSet<NodeId> = region.leo_ids.intersection(&pending).copied().collect();
        if leos.is_empty() {
            continue;
        }
        let controllers: Vec<NodeId> = leos
            .iter()
            .flat_map(|&l| coverage.coverers(l).iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        stats.regions += 1;
        stats.largest_region = stats.largest_region.max(leos.len());
        stats.clustered += leos.len();
        let m = controllers.len();
        if m == 1 {
            for &l in &leos {
                assignment.assign(l, controllers[0]);
            }
            continue;
        }
        let corg = build_corg(&leos, &controllers, input.traffic, snapshot, coverage, overhead, &params.corg)?;
        let first = *leos.iter().next().expect("region is nonempty");
        let outcome = spectral_cluster(&corg, m, region_seed(seed, first), snapshot, coverage);
        stats.spectral_retries += outcome.retries;
        let matched: Vec<NodeId> = if outcome.fallback {
            stats.fallback_regions += 1;
            outcome.clusters.iter().map(|c| c.attached.expect("fallback clusters are attached")).collect()
        } else {
            km_match_relaxed(&outcome.clusters, &controllers, snapshot, coverage)?
        };
        for (cluster, &k) in outcome.clusters.iter().zip(&matched) {
            for &l in &cluster.members {
                if coverage.covers(k, l) {
                    assignment.assign(l, k);
                } else {
                    let fix = nearest_coverer(l, snapshot, coverage).expect("pending LEOs are covered");
                    assignment.assign(l, fix);
                    stats.fov_repairs += 1;
                }
            }
        }
    }

    if params.fine_tune {
        if let Some(future) = input.future {
            let tuned = fine_tune_boundaries(&assignment, snapshot, coverage, future, input.prev.map(|p| p.0));
            stats.fine_tune_moves = tuned.moves;
            assignment = tuned.assignment;
        }
    }
    validate(&assignment, snapshot, coverage)?;
    Ok((assignment, stats))
}

/// Count of LEOs whose controller differs between consecutive assignments,
/// summed over a sequence.
pub fn total_migrations(assignments: &[DomainAssignment]) -> usize {
    assignments.windows(2).map(|w| w[1].migrated_from(&w[0]).len()).sum()
}

/// Domain sizes keyed by controller.
pub fn domain_sizes(assignment: &DomainAssignment) -> BTreeMap<NodeId, usize> {
    assignment.domains().into_iter().map(|(k, m)| (k, m.len())).collect()
}
