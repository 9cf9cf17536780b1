use serde::{Deserialize, Serialize};

use crate::constellation::Network;
use crate::error::{Error, Result};
use crate::overhead::{evaluate, OverheadParams, OverheadReport, SlotContext};
use crate::partition::{
    central_controller, greedy_partition_with_cap, odc_partition, partition_slot, DomainAssignment, PartitionParams,
    PartitionStats, SlotInput, Strategy,
};
use crate::traffic::{scale, TrafficMatrix, TrafficModel, TrafficParams};
use crate::visibility::{compute_fov_domains, segment_time_slots, Coverage, Thresholds, TimeSlot};

use super::{run_slot, EmulationStats, EmulatorParams, SlotRun};

/// Fully resolved scenario ready to run.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub network: Network,
    pub thresholds: Thresholds,
    pub horizon_s: f64,
    pub step_s: f64,
    pub overhead: OverheadParams,
    pub partition: PartitionParams,
    pub traffic: TrafficParams,
    pub emulator: EmulatorParams,
}

/// Time slots, lookahead coverage and unscaled traffic for every slot.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub spec: ScenarioSpec,
    pub slots: Vec<TimeSlot>,
    /// Coverage `lookahead_s` after each slot starts.
    pub futures: Vec<Coverage>,
    /// Traffic at `gamma = 1` for each slot.
    pub base_traffic: Vec<TrafficMatrix>,
    pub gravity_constant: f64,
}

/// Segments the horizon into slots and synthesizes each slot's traffic. When
/// no gravity constant is configured it is calibrated so that, averaged over
/// the slots, the centralized controller is offered `odc_overload` times the
/// requests it can process at `gamma = 1`.
pub fn prepare_scenario(spec: ScenarioSpec) -> Result<PreparedScenario> {
    spec.overhead.validate()?;
    spec.partition.corg.validate()?;
    let slots = segment_time_slots(&spec.network, &spec.thresholds, spec.horizon_s, spec.step_s)?;
    let futures = slots
        .iter()
        .map(|s| compute_fov_domains(&spec.network.snapshot(s.start + spec.partition.lookahead_s), &spec.thresholds))
        .collect();
    let model = TrafficModel::new(spec.traffic.clone(), 1.0);
    let mut base: Vec<TrafficMatrix> = slots.iter().map(|s| model.base_matrix(&s.snapshot, s.index).matrix).collect();
    let g = match spec.traffic.gravity_constant {
        Some(g) => g,
        None => {
            let first = slots.first().ok_or_else(|| Error::InvalidSampling("no time slots".into()))?;
            let central = central_controller(&first.snapshot)
                .ok_or_else(|| Error::Config("scenario has no controllers".into()))?;
            let capacity = spec.overhead.controller_capacity(&first.snapshot, central);
            let per_request = spec.overhead.complexity.ops(spec.network.leo_ids().len()) / capacity;
            let target = spec.traffic.odc_overload / per_request;
            let mean: f64 = base.iter().map(TrafficMatrix::total).sum::<f64>() / base.len() as f64;
            if mean > 0.0 {
                target / mean
            } else {
                1.0
            }
        }
    };
    for m in &mut base {
        for r in m.rates.values_mut() {
            *r *= g;
        }
    }
    Ok(PreparedScenario { spec, slots, futures, base_traffic: base, gravity_constant: g })
}

impl PreparedScenario {
    /// Keeps only the slots with index in `range`.
    pub fn restrict(&mut self, range: std::ops::Range<usize>) {
        let keep = |i: usize| range.contains(&i);
        let mut idx = 0;
        self.slots.retain(|_| {
            idx += 1;
            keep(idx - 1)
        });
        let mut idx = 0;
        self.futures.retain(|_| {
            idx += 1;
            keep(idx - 1)
        });
        let mut idx = 0;
        self.base_traffic.retain(|_| {
            idx += 1;
            keep(idx - 1)
        });
    }

    /// Traffic the partitioner sees for slot position `i`: the previous
    /// slot's measured matrix, or the slot's own for the first slot.
    pub fn partitioner_traffic(&self, i: usize, gamma: f64) -> Result<TrafficMatrix> {
        scale(&self.base_traffic[i.saturating_sub(1)], gamma)
    }

    /// Assignment of every slot under `strategy`.
    pub fn partition(
        &self,
        strategy: Strategy,
        gamma: f64,
        seed: u64,
    ) -> Result<Vec<(DomainAssignment, PartitionStats)>> {
        let mut out: Vec<(DomainAssignment, PartitionStats)> = Vec::with_capacity(self.slots.len());
        for (i, slot) in self.slots.iter().enumerate() {
            let result = match strategy {
                Strategy::ThreeStep => {
                    let traffic = self.partitioner_traffic(i, gamma)?;
                    let prev = (i > 0).then(|| (&out[i - 1].0, &self.slots[i - 1].coverage));
                    partition_slot(
                        SlotInput {
                            slot_index: slot.index,
                            snapshot: &slot.snapshot,
                            coverage: &slot.coverage,
                            future: Some(&self.futures[i]),
                            traffic: &traffic,
                            prev,
                        },
                        &self.spec.overhead,
                        &self.spec.partition,
                        seed,
                    )?
                }
                Strategy::Centralized => (odc_partition(slot.index, &slot.snapshot), PartitionStats::default()),
                Strategy::Greedy => (
                    greedy_partition_with_cap(
                        slot.index,
                        &slot.snapshot,
                        &slot.coverage,
                        self.spec.partition.greedy_cap_factor,
                    ),
                    PartitionStats::default(),
                ),
            };
            out.push(result);
        }
        Ok(out)
    }
}

/// Per-slot results of one (strategy, gamma, seed) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub strategy: Strategy,
    pub gamma: f64,
    pub seed: u64,
    pub assignments: Vec<DomainAssignment>,
    pub partition_stats: Vec<PartitionStats>,
    pub reports: Vec<OverheadReport>,
    pub stats: Vec<EmulationStats>,
}

impl ScenarioRun {
    /// Request-weighted drop rate over all slots.
    pub fn drop_rate(&self) -> f64 {
        let req: usize = self.stats.iter().map(|s| s.requests).sum();
        let drops: usize = self.stats.iter().map(|s| s.drops).sum();
        if req == 0 {
            0.0
        } else {
            drops as f64 / req as f64
        }
    }

    /// Mean response delay over all completed requests.
    pub fn mean_response(&self) -> f64 {
        let n: usize = self.stats.iter().map(EmulationStats::completed).sum();
        if n == 0 {
            return 0.0;
        }
        self.stats.iter().map(|s| s.mean_resp_s * s.completed() as f64).sum::<f64>() / n as f64
    }

    /// Duration-weighted mean of a per-slot report value.
    pub fn time_mean(&self, value: impl Fn(&OverheadReport) -> f64) -> f64 {
        let total: f64 = self.stats.iter().map(|s| s.duration_s).sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.reports.iter().zip(&self.stats).map(|(r, s)| value(r) * s.duration_s).sum::<f64>() / total
    }

    pub fn migrations(&self) -> usize {
        crate::partition::total_migrations(&self.assignments)
    }
}

/// Partitions every slot with `strategy`, scores it analytically and emulates
/// it. Arrivals depend only on the seed, slot and pair, so different
/// strategies and scales share random numbers.
pub fn run_scenario(prepared: &PreparedScenario, strategy: Strategy, gamma: f64, seed: u64) -> Result<ScenarioRun> {
    let parts = prepared.partition(strategy, gamma, seed)?;
    let mut reports = Vec::with_capacity(parts.len());
    let mut stats = Vec::with_capacity(parts.len());
    for (i, slot) in prepared.slots.iter().enumerate() {
        let traffic = scale(&prepared.base_traffic[i], gamma)?;
        let prev = (i > 0).then(|| &parts[i - 1].0);
        let current = &parts[i].0;
        let ctx = SlotContext { snapshot: &slot.snapshot, coverage: &slot.coverage, duration: slot.duration() };
        let mut report = evaluate(ctx, prev, current, &traffic, &prepared.spec.overhead)?;
        let s = run_slot(
            SlotRun { slot, assignment: current, prev_assignment: prev, traffic: &traffic },
            &prepared.spec.overhead,
            &prepared.spec.emulator,
            seed,
        )?;
        report.drop_rate = Some(s.drop_rate);
        reports.push(report);
        stats.push(s);
    }
    let (assignments, partition_stats) = parts.into_iter().unzip();
    Ok(ScenarioRun { strategy, gamma, seed, assignments, partition_stats, reports, stats })
}
