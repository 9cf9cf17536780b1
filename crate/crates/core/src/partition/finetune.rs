use std::collections::BTreeSet;

use crate::constellation::{NetworkSnapshot, NodeId};
use crate::visibility::Coverage;

use super::DomainAssignment;

#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneOutcome {
    pub assignment: DomainAssignment,
    pub moves: usize,
}

/// Predicted handovers for `leo` if it is managed by `controller` now:
/// one for leaving the previous controller and one for losing sight of
/// `controller` before the lookahead horizon.
fn predicted_handovers(leo: NodeId, controller: NodeId, prev: Option<&DomainAssignment>, future: &Coverage) -> usize {
    let leave = prev.and_then(|p| p.controller_of(leo)).is_some_and(|p| p != controller);
    usize::from(leave) + usize::from(!future.covers(controller, leo))
}

/// Moves boundary LEOs that are about to leave their controller's FOV into a
/// neighbouring domain whose controller sees them now and will still see them
/// at the lookahead instant, when that strictly lowers predicted handovers.
/// Neutral moves are skipped: they only trade a later handover for an
/// earlier one.
/// Among several candidates the one whose adjacent members share the LEO's
/// flight direction most wins, then the nearest, then the lowest id.
pub fn fine_tune_boundaries(
    assignment: &DomainAssignment,
    snapshot: &NetworkSnapshot,
    coverage: &Coverage,
    future: &Coverage,
    prev: Option<&DomainAssignment>,
) -> FineTuneOutcome {
    let mut a = assignment.clone();
    if a.fov_waived {
        return FineTuneOutcome { assignment: a, moves: 0 };
    }
    let budget = snapshot.leo_ids.len();
    let mut moves = 0;
    'outer: loop {
        let mut changed = false;
        let leos: Vec<NodeId> = a.domain_of.keys().copied().collect();
        for leo in leos {
            let k = a.domain_of[&leo];
            if future.covers(k, leo) {
                continue;
            }
            let neighbour_domains: BTreeSet<NodeId> =
                snapshot.neighbors(leo).iter().filter_map(|&n| a.controller_of(n)).filter(|&c| c != k).collect();
            let stay = predicted_handovers(leo, k, prev, future);
            let north = snapshot.is_northbound(leo);
            let best = neighbour_domains
                .into_iter()
                .filter(|&c| coverage.covers(c, leo) && future.covers(c, leo))
                .filter(|&c| predicted_handovers(leo, c, prev, future) < stay)
                .map(|c| {
                    let same_direction = snapshot
                        .neighbors(leo)
                        .iter()
                        .filter(|&&n| a.controller_of(n) == Some(c) && snapshot.is_northbound(n) == north)
                        .count();
                    (c, same_direction, snapshot.distance_km(leo, c))
                })
                .min_by(|x, y| y.1.cmp(&x.1).then(x.2.total_cmp(&y.2)).then(x.0.cmp(&y.0)));
            if let Some((c, _, _)) = best {
                a.assign(leo, c);
                moves += 1;
                changed = true;
                if moves >= budget {
                    break 'outer;
                }
            }
        }
        if !changed {
            break;
        }
    }
    FineTuneOutcome { assignment: a, moves }
}
