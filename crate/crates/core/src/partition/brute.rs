use crate::error::{Error, Result};
use crate::overhead::{evaluate, OverheadParams, SlotContext};
use crate::traffic::TrafficMatrix;

use super::DomainAssignment;

/// Largest number of covered LEOs the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Minimum-objective assignment found by enumerating every choice of visible
/// controller per LEO. Among tied optima the lexicographically smallest
/// controller sequence (in LEO id order) wins.
pub fn brute_force_partition(
    ctx: SlotContext<'_>,
    slot_index: usize,
    prev: Option<&DomainAssignment>,
    traffic: &TrafficMatrix,
    params: &OverheadParams,
) -> Result<DomainAssignment> {
    let mut base = DomainAssignment::new(slot_index);
    let mut leos = Vec::new();
    for &l in &ctx.snapshot.leo_ids {
        if ctx.coverage.coverers(l).is_empty() {
            base.unmanaged.insert(l);
        } else {
            leos.push(l);
        }
    }
    if leos.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { leos: leos.len(), limit: BRUTE_FORCE_LIMIT });
    }
    let options: Vec<&[crate::constellation::NodeId]> = leos.iter().map(|&l| ctx.coverage.coverers(l)).collect();
    let mut digits = vec![0usize; leos.len()];
    let mut best: Option<(f64, DomainAssignment)> = None;
    loop {
        let mut a = base.clone();
        for (i, &l) in leos.iter().enumerate() {
            a.assign(l, options[i][digits[i]]);
        }
        if let Ok(report) = evaluate(ctx, prev, &a, traffic, params) {
            if best.as_ref().is_none_or(|(b, _)| report.objective < *b) {
                best = Some((report.objective, a));
            }
        }
        // Odometer with the last LEO turning fastest.
        let mut i = leos.len();
        loop {
            if i == 0 {
                return best.map(|(_, a)| a).ok_or_else(|| Error::Config("no valid assignment exists".into()));
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
}
