//! Analytic control-overhead model: flow-table updates, domain
//! synchronization, controller migration and path computation, all in
//! seconds.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constellation::{NetworkSnapshot, NodeId, Role, SPEED_OF_LIGHT_KM_S};
use crate::error::{Error, Result};
use crate::partition::{validate, DomainAssignment};
use crate::routing::{controller_distance_km, ControlRoutes, LinkBandwidths, LinkClass};
use crate::traffic::TrafficMatrix;
use crate::visibility::Coverage;

/// Cost of computing routes on an `n`-node graph, in operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Complexity {
    #[default]
    #[serde(rename = "n2")]
    Quadratic,
    #[serde(rename = "nlogn")]
    NLogN,
    #[serde(rename = "n3")]
    Cubic,
}

impl Complexity {
    pub fn ops(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Complexity::Quadratic => n * n,
            // log2 floored at 1 so a single-node domain still costs one step.
            Complexity::NLogN => n * n.log2().max(1.0),
            Complexity::Cubic => n * n * n,
        }
    }
}

/// Controller processing capacity: a unit rate times a per-kind multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityModel {
    #[serde(default = "default_ops_unit")]
    pub ops_unit: f64,
    #[serde(default = "default_ground_units")]
    pub ground_units: f64,
    #[serde(default = "default_meo_units")]
    pub meo_units: f64,
    #[serde(default = "default_leo_units")]
    pub leo_units: f64,
}

fn default_ops_unit() -> f64 {
    1.0
}
fn default_ground_units() -> f64 {
    1e5
}
fn default_meo_units() -> f64 {
    1e2
}
fn default_leo_units() -> f64 {
    1.0
}

impl Default for CapacityModel {
    fn default() -> Self {
        Self {
            ops_unit: default_ops_unit(),
            ground_units: default_ground_units(),
            meo_units: default_meo_units(),
            leo_units: default_leo_units(),
        }
    }
}

impl CapacityModel {
    /// Operations per second of a controller of the given kind.
    pub fn capacity(&self, role: Role) -> f64 {
        self.ops_unit
            * match role {
                Role::Ground => self.ground_units,
                Role::Meo => self.meo_units,
                Role::Leo => self.leo_units,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MigrationParams {
    #[serde(default = "default_flow_entry")]
    pub flow_entry_bytes: f64,
    #[serde(default = "default_state_bw")]
    pub state_bandwidth_bps: f64,
    #[serde(default = "default_ho_bytes")]
    pub handover_msg_bytes: f64,
    #[serde(default = "default_per_sat")]
    pub per_sat_processing_s: f64,
    #[serde(default = "default_lifetime")]
    pub mean_flow_lifetime_s: f64,
}

fn default_flow_entry() -> f64 {
    64.0
}
fn default_state_bw() -> f64 {
    1e10
}
fn default_ho_bytes() -> f64 {
    crate::emulator::codec::HANDOVER_LEN as f64
}
fn default_per_sat() -> f64 {
    1e-3
}
fn default_lifetime() -> f64 {
    10.0
}

impl Default for MigrationParams {
    fn default() -> Self {
        Self {
            flow_entry_bytes: default_flow_entry(),
            state_bandwidth_bps: default_state_bw(),
            handover_msg_bytes: default_ho_bytes(),
            per_sat_processing_s: default_per_sat(),
            mean_flow_lifetime_s: default_lifetime(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadParams {
    #[serde(default = "default_flow_bytes")]
    pub flow_msg_bytes: f64,
    #[serde(default = "default_sync_bytes")]
    pub sync_msg_bytes: f64,
    /// Link-state synchronizations per second.
    #[serde(default = "default_sync_hz")]
    pub sync_hz: f64,
    #[serde(default)]
    pub links: LinkBandwidths,
    #[serde(default)]
    pub capacity: CapacityModel,
    /// Weight of path computation against control overhead in the objective.
    #[serde(default = "default_tradeoff")]
    pub tradeoff_lambda: f64,
    #[serde(default)]
    pub complexity: Complexity,
    #[serde(default)]
    pub migration: MigrationParams,
}

fn default_flow_bytes() -> f64 {
    36.0
}
fn default_sync_bytes() -> f64 {
    24.0
}
fn default_sync_hz() -> f64 {
    1.0
}
fn default_tradeoff() -> f64 {
    1.0
}

impl Default for OverheadParams {
    fn default() -> Self {
        Self {
            flow_msg_bytes: default_flow_bytes(),
            sync_msg_bytes: default_sync_bytes(),
            sync_hz: default_sync_hz(),
            links: LinkBandwidths::default(),
            capacity: CapacityModel::default(),
            tradeoff_lambda: default_tradeoff(),
            complexity: Complexity::default(),
            migration: MigrationParams::default(),
        }
    }
}

impl OverheadParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("flow_msg_bytes", self.flow_msg_bytes),
            ("sync_msg_bytes", self.sync_msg_bytes),
            ("sync_hz", self.sync_hz),
            ("links.isl_bps", self.links.isl_bps),
            ("links.meo_leo_bps", self.links.meo_leo_bps),
            ("links.gs_leo_bps", self.links.gs_leo_bps),
            ("links.controller_bps", self.links.controller_bps),
            ("capacity.ops_unit", self.capacity.ops_unit),
            ("capacity.ground_units", self.capacity.ground_units),
            ("capacity.meo_units", self.capacity.meo_units),
            ("capacity.leo_units", self.capacity.leo_units),
            ("migration.flow_entry_bytes", self.migration.flow_entry_bytes),
            ("migration.state_bandwidth_bps", self.migration.state_bandwidth_bps),
            ("migration.handover_msg_bytes", self.migration.handover_msg_bytes),
            ("migration.mean_flow_lifetime_s", self.migration.mean_flow_lifetime_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: format!("must be positive, got {v}") });
            }
        }
        let nonnegative = [
            ("tradeoff_lambda", self.tradeoff_lambda),
            ("migration.per_sat_processing_s", self.migration.per_sat_processing_s),
        ];
        for (name, v) in nonnegative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: format!("must be nonnegative, got {v}") });
            }
        }
        Ok(())
    }

    pub fn controller_capacity(&self, snapshot: &NetworkSnapshot, controller: NodeId) -> f64 {
        self.capacity.capacity(snapshot.role(controller))
    }
}

/// Per-domain share of each overhead component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBreakdown {
    pub controller: NodeId,
    pub members: usize,
    pub w_flow: f64,
    pub w_sync_in: f64,
    pub w_mig: f64,
    pub w_cpt_intra: f64,
    pub w_cpt_inter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub slot_index: usize,
    pub w_flow: f64,
    pub w_sync_in: f64,
    pub w_sync_out: f64,
    pub w_mig: f64,
    pub w_cpt_intra: f64,
    pub w_cpt_inter: f64,
    pub w_ctl: f64,
    pub objective: f64,
    pub eta_control: Option<f64>,
    pub drop_rate: Option<f64>,
    pub domains: Vec<DomainBreakdown>,
}

impl OverheadReport {
    pub fn w_cpt(&self) -> f64 {
        self.w_cpt_intra + self.w_cpt_inter
    }

    /// `(component, value)` pairs in a fixed order.
    pub fn components(&self) -> Vec<(&'static str, f64)> {
        let mut rows = vec![
            ("w_flow", self.w_flow),
            ("w_sync_in", self.w_sync_in),
            ("w_sync_out", self.w_sync_out),
            ("w_mig", self.w_mig),
            ("w_cpt_intra", self.w_cpt_intra),
            ("w_cpt_inter", self.w_cpt_inter),
            ("w_ctl", self.w_ctl),
            ("objective", self.objective),
        ];
        if let Some(eta) = self.eta_control {
            rows.push(("eta_control", eta));
        }
        if let Some(d) = self.drop_rate {
            rows.push(("drop_rate", d));
        }
        rows
    }

    /// Writes `slot,component,value` rows.
    pub fn write_csv<W: Write>(reports: &[OverheadReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "component", "value"])?;
        for r in reports {
            for (name, v) in r.components() {
                w.write_record([r.slot_index.to_string(), name.to_string(), format!("{v:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Useful (flow-update) share of the total control overhead; absent when the
/// total is zero.
pub fn control_efficiency(report: &OverheadReport) -> Option<f64> {
    efficiency(report.w_flow, report.w_ctl)
}

fn efficiency(w_flow: f64, w_ctl: f64) -> Option<f64> {
    (w_ctl > 0.0).then(|| w_flow / w_ctl)
}

fn effective(routes: &ControlRoutes, leo: NodeId) -> Result<NodeId> {
    routes.effective_controller(leo).ok_or(Error::DisconnectedDomain(leo))
}

/// Flow-table update overhead per domain: every flow pays one request message
/// along the source's control path.
pub fn flow_overhead_by_domain(
    routes: &ControlRoutes,
    traffic: &TrafficMatrix,
    params: &OverheadParams,
) -> Result<BTreeMap<NodeId, f64>> {
    let mut per_source: BTreeMap<NodeId, f64> = BTreeMap::new();
    for (src, _, rate) in traffic.iter() {
        *per_source.entry(src).or_insert(0.0) += rate;
    }
    let mut out = BTreeMap::new();
    for (src, rate) in per_source {
        let path = routes.path(src).ok_or(Error::DisconnectedDomain(src))?;
        *out.entry(path.controller).or_insert(0.0) += rate * path.delay(params.flow_msg_bytes, &params.links);
    }
    Ok(out)
}

pub fn flow_overhead(routes: &ControlRoutes, traffic: &TrafficMatrix, params: &OverheadParams) -> Result<f64> {
    Ok(flow_overhead_by_domain(routes, traffic, params)?.values().sum())
}

/// ISL edges with both endpoints in `members`.
pub fn intra_domain_edges(snapshot: &NetworkSnapshot, members: &std::collections::BTreeSet<NodeId>) -> usize {
    members.iter().map(|&a| snapshot.neighbors(a).iter().filter(|&&b| b > a && members.contains(&b)).count()).sum()
}

/// Intra-domain synchronization per domain: the slowest member's report of
/// all `|E_d|` link states, `sync_hz` times per second.
pub fn sync_in_by_domain(
    assignment: &DomainAssignment,
    routes: &ControlRoutes,
    snapshot: &NetworkSnapshot,
    params: &OverheadParams,
) -> Result<BTreeMap<NodeId, f64>> {
    let mut out = BTreeMap::new();
    for (k, members) in assignment.domains() {
        let bytes = intra_domain_edges(snapshot, &members) as f64 * params.sync_msg_bytes;
        let mut worst: f64 = 0.0;
        for &l in &members {
            let path = routes.path(l).ok_or(Error::DisconnectedDomain(l))?;
            worst = worst.max(path.delay(bytes, &params.links));
        }
        out.insert(k, params.sync_hz * worst);
    }
    Ok(out)
}

/// Inter-controller synchronization: the controller whose broadcast of its
/// domain view to every peer takes longest.
pub fn sync_out(assignment: &DomainAssignment, snapshot: &NetworkSnapshot, params: &OverheadParams) -> f64 {
    let domains = assignment.domains();
    let bw = params.links.get(LinkClass::InterController);
    let mut worst: f64 = 0.0;
    for (&k, members) in &domains {
        let tx = 8.0 * members.len() as f64 * params.sync_msg_bytes / bw;
        let total: f64 = domains
            .keys()
            .filter(|&&p| p != k)
            .map(|&p| tx + controller_distance_km(snapshot, k, p) / SPEED_OF_LIGHT_KM_S)
            .sum();
        worst = worst.max(total);
    }
    params.sync_hz * worst
}

pub fn sync_overhead(
    assignment: &DomainAssignment,
    routes: &ControlRoutes,
    snapshot: &NetworkSnapshot,
    params: &OverheadParams,
) -> Result<(f64, f64)> {
    let inner: f64 = sync_in_by_domain(assignment, routes, snapshot, params)?.values().sum();
    Ok((inner, sync_out(assignment, snapshot, params)))
}

/// Migration overhead per domain of `current`: handover frequency times the
/// cost of moving the domain's flow state plus notifying each migrated LEO.
pub fn migration_by_domain(
    prev: Option<&DomainAssignment>,
    current: &DomainAssignment,
    traffic: &TrafficMatrix,
    slot_duration: f64,
    snapshot: &NetworkSnapshot,
    params: &OverheadParams,
) -> BTreeMap<NodeId, f64> {
    let Some(prev) = prev else {
        return current.domains().keys().map(|&k| (k, 0.0)).collect();
    };
    let outgoing = traffic.outgoing();
    let m = &params.migration;
    let mut out = BTreeMap::new();
    for (k, members) in current.domains() {
        let changed = members.iter().filter(|l| prev.controller_of(**l).is_some_and(|p| p != k)).count();
        if changed == 0 || slot_duration <= 0.0 {
            out.insert(k, 0.0);
            continue;
        }
        let f_mig = changed as f64 / slot_duration;
        let live: f64 =
            members.iter().map(|l| outgoing.get(l).copied().unwrap_or(0.0)).sum::<f64>() * m.mean_flow_lifetime_s;
        let w_st = 8.0 * m.flow_entry_bytes * live / m.state_bandwidth_bps;
        let bw = params.links.get(LinkClass::controller_link(snapshot.role(k)));
        let w_ho = changed as f64 * (8.0 * m.handover_msg_bytes / bw + m.per_sat_processing_s);
        out.insert(k, f_mig * (w_st + w_ho));
    }
    out
}

pub fn migration_overhead(
    prev: Option<&DomainAssignment>,
    current: &DomainAssignment,
    traffic: &TrafficMatrix,
    slot_duration: f64,
    snapshot: &NetworkSnapshot,
    params: &OverheadParams,
) -> f64 {
    migration_by_domain(prev, current, traffic, slot_duration, snapshot, params).values().sum()
}

/// Request rates handled by each controller: `(intra, inter)`. A flow is
/// intra-domain when both endpoints are served by the same controller, and is
/// charged to the source's controller either way.
pub fn request_rates(routes: &ControlRoutes, traffic: &TrafficMatrix) -> Result<BTreeMap<NodeId, (f64, f64)>> {
    let mut out: BTreeMap<NodeId, (f64, f64)> = BTreeMap::new();
    for (src, dst, rate) in traffic.iter() {
        let a = effective(routes, src)?;
        let b = effective(routes, dst)?;
        let e = out.entry(a).or_insert((0.0, 0.0));
        if a == b {
            e.0 += rate;
        } else {
            e.1 += rate;
        }
    }
    Ok(out)
}

/// Path computation per controller: `(intra, inter)` seconds per second.
pub fn path_compute_by_domain(
    assignment: &DomainAssignment,
    routes: &ControlRoutes,
    traffic: &TrafficMatrix,
    snapshot: &NetworkSnapshot,
    params: &OverheadParams,
) -> Result<BTreeMap<NodeId, (f64, f64)>> {
    let domains = assignment.domains();
    let domain_count = domains.len();
    let rates = request_rates(routes, traffic)?;
    let mut out = BTreeMap::new();
    for (k, members) in &domains {
        let (f_intra, f_inter) = rates.get(k).copied().unwrap_or((0.0, 0.0));
        let c = params.controller_capacity(snapshot, *k);
        out.insert(
            *k,
            (params.complexity.ops(members.len()) / c * f_intra, params.complexity.ops(domain_count) / c * f_inter),
        );
    }
    Ok(out)
}

pub fn path_compute_overhead(
    assignment: &DomainAssignment,
    routes: &ControlRoutes,
    traffic: &TrafficMatrix,
    snapshot: &NetworkSnapshot,
    params: &OverheadParams,
) -> Result<(f64, f64)> {
    let per = path_compute_by_domain(assignment, routes, traffic, snapshot, params)?;
    Ok(per.values().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1)))
}

/// Everything needed to score one slot's assignment.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    pub snapshot: &'a NetworkSnapshot,
    pub coverage: &'a Coverage,
    pub duration: f64,
}

/// Validates `current` and evaluates every component. The objective is
/// `W_CTL + tradeoff_lambda * W_CPT`.
pub fn evaluate(
    ctx: SlotContext<'_>,
    prev: Option<&DomainAssignment>,
    current: &DomainAssignment,
    traffic: &TrafficMatrix,
    params: &OverheadParams,
) -> Result<OverheadReport> {
    validate(current, ctx.snapshot, ctx.coverage)?;
    let routes = ControlRoutes::build(ctx.snapshot, ctx.coverage, current)?;
    evaluate_with_routes(ctx, &routes, prev, current, traffic, params)
}

/// As [`evaluate`] with precomputed routes and without the constraint check.
pub fn evaluate_with_routes(
    ctx: SlotContext<'_>,
    routes: &ControlRoutes,
    prev: Option<&DomainAssignment>,
    current: &DomainAssignment,
    traffic: &TrafficMatrix,
    params: &OverheadParams,
) -> Result<OverheadReport> {
    let flow = flow_overhead_by_domain(routes, traffic, params)?;
    let sync_in = sync_in_by_domain(current, routes, ctx.snapshot, params)?;
    let w_sync_out = sync_out(current, ctx.snapshot, params);
    let mig = migration_by_domain(prev, current, traffic, ctx.duration, ctx.snapshot, params);
    let cpt = path_compute_by_domain(current, routes, traffic, ctx.snapshot, params)?;

    let mut domains = Vec::new();
    for (k, members) in current.domains() {
        let (intra, inter) = cpt.get(&k).copied().unwrap_or((0.0, 0.0));
        domains.push(DomainBreakdown {
            controller: k,
            members: members.len(),
            w_flow: flow.get(&k).copied().unwrap_or(0.0),
            w_sync_in: sync_in.get(&k).copied().unwrap_or(0.0),
            w_mig: mig.get(&k).copied().unwrap_or(0.0),
            w_cpt_intra: intra,
            w_cpt_inter: inter,
        });
    }
    let w_flow: f64 = flow.values().sum();
    let w_sync_in: f64 = sync_in.values().sum();
    let w_mig: f64 = mig.values().sum();
    let w_cpt_intra: f64 = cpt.values().map(|v| v.0).sum();
    let w_cpt_inter: f64 = cpt.values().map(|v| v.1).sum();
    let w_ctl = w_flow + w_sync_in + w_sync_out + w_mig;
    Ok(OverheadReport {
        slot_index: current.slot_index,
        w_flow,
        w_sync_in,
        w_sync_out,
        w_mig,
        w_cpt_intra,
        w_cpt_inter,
        w_ctl,
        objective: w_ctl + params.tradeoff_lambda * (w_cpt_intra + w_cpt_inter),
        eta_control: efficiency(w_flow, w_ctl),
        drop_rate: None,
        domains,
    })
}

/// Objective value of `current`, or the constraint violations it commits.
pub fn objective(
    ctx: SlotContext<'_>,
    prev: Option<&DomainAssignment>,
    current: &DomainAssignment,
    traffic: &TrafficMatrix,
    params: &OverheadParams,
) -> Result<f64> {
    evaluate(ctx, prev, current, traffic, params).map(|r| r.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Vec3;
    use approx::assert_relative_eq;

    #[test]
    fn complexity_values() {
        assert_eq!(Complexity::Quadratic.ops(4), 16.0);
        assert_eq!(Complexity::Cubic.ops(3), 27.0);
        assert_eq!(Complexity::NLogN.ops(8), 24.0);
        assert_eq!(Complexity::NLogN.ops(1), 1.0);
    }

    #[test]
    fn default_params_valid_and_sizes() {
        let p = OverheadParams::default();
        p.validate().unwrap();
        assert_eq!(p.flow_msg_bytes, 36.0);
        assert_eq!(p.sync_msg_bytes, 24.0);
        let mut bad = p.clone();
        bad.sync_hz = 0.0;
        assert!(bad.validate().is_err());
        let cap = CapacityModel::default();
        assert_eq!(cap.capacity(Role::Ground) / cap.capacity(Role::Meo), 1e3);
        assert_eq!(cap.capacity(Role::Meo) / cap.capacity(Role::Leo), 1e2);
    }

    #[test]
    fn efficiency_cases() {
        assert_eq!(efficiency(1.0, 1.0), Some(1.0));
        assert_relative_eq!(efficiency(1.0, 3.0).unwrap(), 1.0 / 3.0);
        assert_eq!(efficiency(0.0, 0.0), None);
    }

    #[test]
    fn single_flow_hand_value() {
        // LEO 0 and LEO 1 sit 1000 km below controller 2.
        let snap = NetworkSnapshot::from_parts(
            0.0,
            vec![Role::Leo, Role::Leo, Role::Meo],
            vec![Vec3::new(7000.0, 0.0, 0.0), Vec3::new(7000.0, 0.0, 0.0), Vec3::new(8000.0, 0.0, 0.0)],
            vec![Vec3::zeros(); 3],
            [],
        );
        let cov = Coverage::from_domains(
            &snap.leo_ids,
            vec![crate::visibility::FovDomain {
                controller_id: NodeId(2),
                member_leo_ids: [NodeId(0), NodeId(1)].into(),
            }],
        );
        let a = DomainAssignment::from_pairs(0, [(0, 2), (1, 2)]);
        let routes = ControlRoutes::build(&snap, &cov, &a).unwrap();
        let mut t = TrafficMatrix::empty(0);
        t.add(NodeId(0), NodeId(1), 2.0);
        let p = OverheadParams { links: LinkBandwidths::uniform(1e6), ..Default::default() };
        let w = flow_overhead(&routes, &t, &p).unwrap();
        assert_relative_eq!(w, 2.0 * (2.88e-4 + 1000.0 / SPEED_OF_LIGHT_KM_S), max_relative = 1e-12);
        assert_eq!(flow_overhead(&routes, &TrafficMatrix::empty(0), &p).unwrap(), 0.0);
    }
}
