use crate::constellation::{NetworkSnapshot, NodeId, Role};
use crate::visibility::Coverage;

use super::DomainAssignment;

/// Controller that runs the whole network in the centralized baseline: the
/// lowest-id ground station, or the first controller when there is none.
pub fn central_controller(snapshot: &NetworkSnapshot) -> Option<NodeId> {
    snapshot
        .controller_ids
        .iter()
        .copied()
        .find(|&k| snapshot.role(k) == Role::Ground)
        .or_else(|| snapshot.controller_ids.first().copied())
}

/// Every LEO in a single domain under the central controller. The FOV
/// constraint is waived: LEOs out of view reach it through relays.
pub fn odc_partition(slot_index: usize, snapshot: &NetworkSnapshot) -> DomainAssignment {
    let mut a = DomainAssignment::new(slot_index);
    a.fov_waived = true;
    if let Some(k) = central_controller(snapshot) {
        for &l in &snapshot.leo_ids {
            a.assign(l, k);
        }
    }
    a
}

/// Greedy nearest-controller assignment with the default load cap of 1.5x
/// the mean domain size.
pub fn greedy_partition(slot_index: usize, snapshot: &NetworkSnapshot, coverage: &Coverage) -> DomainAssignment {
    greedy_partition_with_cap(slot_index, snapshot, coverage, 1.5)
}

/// LEOs in ascending id order take the nearest visible controller whose
/// domain holds fewer than `cap_factor * covered / controllers` LEOs. When
/// every visible controller is full the nearest one is used anyway.
pub fn greedy_partition_with_cap(
    slot_index: usize,
    snapshot: &NetworkSnapshot,
    coverage: &Coverage,
    cap_factor: f64,
) -> DomainAssignment {
    let mut a = DomainAssignment::new(slot_index);
    let covered = snapshot.leo_ids.iter().filter(|&&l| !coverage.coverers(l).is_empty()).count();
    let controllers = snapshot.controller_ids.len().max(1);
    let cap = (cap_factor * covered as f64 / controllers as f64).ceil().max(1.0) as usize;
    let mut load = vec![0usize; snapshot.roles.len()];
    for &l in &snapshot.leo_ids {
        let mut options: Vec<NodeId> = coverage.coverers(l).to_vec();
        if options.is_empty() {
            a.unmanaged.insert(l);
            continue;
        }
        options.sort_by(|&x, &y| snapshot.distance_km(l, x).total_cmp(&snapshot.distance_km(l, y)).then(x.cmp(&y)));
        let k = options.iter().copied().find(|k| load[k.index()] < cap).unwrap_or(options[0]);
        load[k.index()] += 1;
        a.assign(l, k);
    }
    a
}
