//! Deterministic discrete-event emulation of the control plane: flow
//! requests, controller queues, flow-table updates, link-state
//! synchronization and handovers.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constellation::{NodeId, SPEED_OF_LIGHT_KM_S};
use crate::error::{Error, Result};
use crate::overhead::{intra_domain_edges, OverheadParams};
use crate::partition::{check_constraints, DomainAssignment};
use crate::routing::{controller_distance_km, shortest_path, ControlRoutes, LinkClass};
use crate::traffic::TrafficMatrix;
use crate::visibility::TimeSlot;

pub mod codec;
mod scenario;
mod stats;

pub use scenario::{prepare_scenario, run_scenario, PreparedScenario, ScenarioRun, ScenarioSpec};
pub use stats::{EmulationStats, StatsRow};

use codec::{
    encode_edge_sync, encode_flow_request, encode_flow_update, encode_handover, EdgeSync, FlowRequest, FlowUpdate,
    Handover,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmulatorParams {
    /// A request is dropped when it would wait longer than this at its
    /// controller.
    #[serde(default = "default_window")]
    pub queue_window_s: f64,
    /// Payload bytes carried in each flow request after the fixed fields.
    #[serde(default = "default_request_data")]
    pub request_data_bytes: usize,
}

fn default_window() -> f64 {
    1.0
}
fn default_request_data() -> usize {
    8
}

impl Default for EmulatorParams {
    fn default() -> Self {
        Self { queue_window_s: default_window(), request_data_bytes: default_request_data() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    FlowRequest,
    FlowUpdate,
    EdgeSync,
    Handover,
}

/// Everything the emulator needs for one slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotRun<'a> {
    pub slot: &'a TimeSlot,
    pub assignment: &'a DomainAssignment,
    pub prev_assignment: Option<&'a DomainAssignment>,
    /// Scaled traffic; its `gamma` lets arrivals be thinned from the
    /// unscaled process.
    pub traffic: &'a TrafficMatrix,
}

/// Event time with a total order.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    /// Request `index` reaches its controller.
    RequestAtController(usize),
    /// Last flow update of request `index` delivered.
    UpdatesDelivered(usize),
    /// Link-state synchronization round.
    SyncTick(u64),
}

struct Request {
    src: NodeId,
    dst: NodeId,
    created: f64,
    controller: NodeId,
    intra: bool,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the arrival stream of one source-destination pair. Independent of
/// strategy and traffic scale so runs share random numbers.
pub fn pair_seed(seed: u64, slot: usize, src: NodeId, dst: NodeId) -> u64 {
    let mut h = splitmix(seed);
    h = splitmix(h ^ slot as u64);
    h = splitmix(h ^ u64::from(src.0));
    splitmix(h ^ u64::from(dst.0))
}

/// Poisson arrival times in `[start, end)` for one pair. Candidates are drawn
/// at the unscaled rate and each is kept with probability `gamma`, so a lower
/// scale sees a subset of a higher scale's arrivals.
pub fn pair_arrivals(base_rate: f64, gamma: f64, start: f64, end: f64, seed: u64) -> Vec<f64> {
    let mut out = Vec::new();
    if base_rate <= 0.0 || gamma <= 0.0 {
        return out;
    }
    let exp = Exp::new(base_rate).expect("positive rate");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = start;
    loop {
        t += exp.sample(&mut rng);
        let keep: f64 = rng.random();
        if t >= end {
            return out;
        }
        if keep < gamma {
            out.push(t);
        }
    }
}

struct Trace(Sha256);

impl Trace {
    fn record(&mut self, tag: u8, time: f64, a: u64, b: u64) {
        self.0.update([tag]);
        self.0.update(time.to_bits().to_be_bytes());
        self.0.update(a.to_be_bytes());
        self.0.update(b.to_be_bytes());
    }
}

/// Runs the control plane for one slot and reports measured statistics.
pub fn run_slot(
    run: SlotRun<'_>,
    overhead: &OverheadParams,
    params: &EmulatorParams,
    seed: u64,
) -> Result<EmulationStats> {
    let slot = run.slot;
    let snapshot = &slot.snapshot;
    let violations = check_constraints(run.assignment, snapshot, &slot.coverage);
    if !violations.is_empty() {
        return Err(Error::ConstraintViolation(violations));
    }
    let routes = ControlRoutes::build(snapshot, &slot.coverage, run.assignment)?;
    let links = &overhead.links;
    let domains = run.assignment.domains();
    let domain_count = domains.len();
    let (start, end) = (slot.start, slot.end);
    let duration = end - start;
    let mut stats = EmulationStats::new(slot.index, run.traffic.gamma, seed, duration);
    let mut trace = Trace(Sha256::new());

    // Flow arrivals.
    let mut requests: Vec<Request> = Vec::new();
    for (src, dst, rate) in run.traffic.iter() {
        let base = run.traffic.base_rate(rate);
        let times = pair_arrivals(base, run.traffic.gamma, start, end, pair_seed(seed, slot.index, src, dst));
        if times.is_empty() {
            continue;
        }
        let a = routes.effective_controller(src).ok_or(Error::DisconnectedDomain(src))?;
        let b = routes.effective_controller(dst).ok_or(Error::DisconnectedDomain(dst))?;
        for t in times {
            requests.push(Request { src, dst, created: t, controller: a, intra: a == b });
        }
    }
    requests.sort_by(|x, y| x.created.total_cmp(&y.created).then(x.src.cmp(&y.src)).then(x.dst.cmp(&y.dst)));

    let mut heap: BinaryHeap<Reverse<(Time, u64, Event)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<Reverse<(Time, u64, Event)>>, t: f64, e: Event| {
        heap.push(Reverse((Time(t), seq, e)));
        seq += 1;
    };

    let mut request_delay_sum = 0.0;
    for (i, r) in requests.iter().enumerate() {
        let msg = FlowRequest {
            xid: i as u32,
            buffer_id: u32::MAX,
            total_len: params.request_data_bytes as u16,
            reason: 0,
            table_id: 0,
            cookie: 0,
            match_src: r.src.0 as u16,
            match_dst: r.dst.0 as u16,
            data: vec![0; params.request_data_bytes],
        };
        let bytes = encode_flow_request(&msg)?.len();
        stats.count(MessageKind::FlowRequest, bytes);
        let path = routes.path(r.src).expect("every source has a route");
        let d = path.delay(bytes as f64, links);
        request_delay_sum += d;
        push(&mut heap, r.created + d, Event::RequestAtController(i));
    }
    stats.measured_w_flow = if duration > 0.0 { request_delay_sum / duration } else { 0.0 };

    let sync_period = 1.0 / overhead.sync_hz;
    let ticks = ((duration / sync_period).ceil() as u64).max(1);
    for n in 0..ticks {
        let t = start + n as f64 * sync_period;
        if t < end || n == 0 {
            push(&mut heap, t, Event::SyncTick(n));
        }
    }

    let update_bytes = encode_flow_update(&FlowUpdate::default()).len();
    let sync_bytes = encode_edge_sync(&EdgeSync::default())?.len();
    let mut busy_until: HashMap<NodeId, f64> = HashMap::new();
    let mut path_cache: HashMap<(NodeId, NodeId), Vec<NodeId>> = HashMap::new();
    let mut last_time = f64::NEG_INFINITY;
    let mut sync_delays = 0.0;
    let mut sync_count = 0usize;

    while let Some(Reverse((Time(t), _, event))) = heap.pop() {
        debug_assert!(t >= last_time, "event clock went backwards");
        last_time = t;
        match event {
            Event::RequestAtController(i) => {
                let r = &requests[i];
                trace.record(1, t, u64::from(r.src.0), u64::from(r.dst.0));
                let k = r.controller;
                let free = busy_until.get(&k).copied().unwrap_or(f64::NEG_INFINITY);
                let begin = free.max(t);
                if begin - t > params.queue_window_s {
                    stats.drops += 1;
                    continue;
                }
                let capacity = overhead.controller_capacity(snapshot, k);
                let n = if r.intra { domains.get(&k).map_or(1, |m| m.len()) } else { domain_count };
                let done = begin + overhead.complexity.ops(n) / capacity;
                busy_until.insert(k, done);
                let ready = if r.intra {
                    done
                } else {
                    let peer = routes.effective_controller(r.dst).expect("checked above");
                    let one_way = 8.0 * update_bytes as f64 / links.get(LinkClass::InterController)
                        + controller_distance_km(snapshot, k, peer) / SPEED_OF_LIGHT_KM_S;
                    done + 2.0 * one_way
                };
                let nodes = path_cache
                    .entry((r.src, r.dst))
                    .or_insert_with(|| shortest_path(snapshot, r.src, r.dst).unwrap_or_else(|| vec![r.src, r.dst]));
                let mut last = ready;
                for &node in nodes.iter() {
                    let msg = FlowUpdate {
                        command: 0,
                        priority: 1,
                        buffer_id: u32::MAX,
                        cookie: i as u64,
                        match_src: r.src.0 as u16,
                        match_dst: r.dst.0 as u16,
                        ..Default::default()
                    };
                    let bytes = encode_flow_update(&msg).len();
                    stats.count(MessageKind::FlowUpdate, bytes);
                    let path = routes.path(node).expect("every LEO has a route");
                    last = last.max(ready + path.delay(bytes as f64, links));
                }
                push(&mut heap, last, Event::UpdatesDelivered(i));
            }
            Event::UpdatesDelivered(i) => {
                let r = &requests[i];
                trace.record(2, t, u64::from(r.src.0), u64::from(r.dst.0));
                stats.response_delays.push(t - r.created);
            }
            Event::SyncTick(n) => {
                trace.record(3, t, n, 0);
                let stamp = (t * 1000.0).round().max(0.0) as u64;
                for (&k, members) in &domains {
                    for &a in members {
                        for &b in snapshot.neighbors(a) {
                            if b <= a || !members.contains(&b) {
                                continue;
                            }
                            let msg = EdgeSync {
                                link_type: 0,
                                status: 1,
                                bandwidth_kbps: (links.isl_bps / 1e3) as u32,
                                weight: snapshot.distance_km(a, b) / SPEED_OF_LIGHT_KM_S * 1e3,
                                src: a.0,
                                dst: b.0,
                                timestamp_ms: stamp,
                            };
                            let bytes = encode_edge_sync(&msg)?.len();
                            stats.count(MessageKind::EdgeSync, bytes);
                            sync_delays += routes.path(a).expect("member has a route").delay(bytes as f64, links);
                            sync_count += 1;
                        }
                    }
                    let size = members.len();
                    for &p in domains.keys().filter(|&&p| p != k) {
                        for _ in 0..size {
                            stats.count(MessageKind::EdgeSync, sync_bytes);
                        }
                        sync_delays += 8.0 * (size * sync_bytes) as f64 / links.get(LinkClass::InterController)
                            + controller_distance_km(snapshot, k, p) / SPEED_OF_LIGHT_KM_S;
                        sync_count += 1;
                    }
                }
            }
        }
    }

    if let Some(prev) = run.prev_assignment {
        for leo in run.assignment.migrated_from(prev) {
            let msg = Handover {
                leo: leo.0,
                from: prev.controller_of(leo).map_or(0, |k| k.0),
                to: run.assignment.controller_of(leo).map_or(0, |k| k.0),
                slot: slot.index as u32,
            };
            let bytes = encode_handover(&msg).len();
            stats.count(MessageKind::Handover, bytes);
            trace.record(4, end, u64::from(msg.leo), u64::from(msg.to));
        }
    }

    stats.requests = requests.len();
    stats.sync_delay_s = if sync_count > 0 { sync_delays / sync_count as f64 } else { 0.0 };
    stats.intra_edges = domains.values().map(|m| intra_domain_edges(snapshot, m)).sum();
    stats.finish(hex::encode(trace.0.finalize()));
    Ok(stats)
}
