//! Control overhead relationship graph over an overlap region and its
//! Gaussian-kernel similarity matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::constellation::{NetworkSnapshot, NodeId, Role};
use crate::error::{Error, Result};
use crate::overhead::OverheadParams;
use crate::routing::{hop_delay, LinkClass};
use crate::traffic::TrafficMatrix;
use crate::visibility::Coverage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorgParams {
    /// Weight of the flow-update cost.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Weight of the synchronization cost; migration gets `1 - alpha - beta`.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Seconds charged for fully opposite flight directions.
    #[serde(default = "default_mig_unit")]
    pub mig_unit_s: f64,
}

fn default_alpha() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    0.3
}
fn default_mig_unit() -> f64 {
    1.0
}

impl Default for CorgParams {
    fn default() -> Self {
        Self { alpha: default_alpha(), beta: default_beta(), mig_unit_s: default_mig_unit() }
    }
}

impl CorgParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha + self.beta <= 1.0) {
            return Err(Error::InvalidCorgWeights { alpha: self.alpha, beta: self.beta });
        }
        if !(self.mig_unit_s >= 0.0) {
            return Err(Error::InvalidParameter { name: "mig_unit_s", reason: "must be nonnegative".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PairCosts {
    pub flow: f64,
    pub sync: f64,
    pub mig: f64,
}

/// Half the distance between unit velocity vectors, scaled to seconds: zero
/// for co-moving nodes, `mig_unit_s` for opposite directions.
pub fn direction_divergence(snapshot: &NetworkSnapshot, a: NodeId, b: NodeId, mig_unit_s: f64) -> f64 {
    let va = snapshot.velocity(a);
    let vb = snapshot.velocity(b);
    if va.norm() == 0.0 || vb.norm() == 0.0 {
        return 0.0;
    }
    (va.normalize() - vb.normalize()).norm() / 2.0 * mig_unit_s
}

/// Costs of the CORG edge between `i` and `j`. For a LEO-LEO edge the flow
/// term uses the pair's rates in both directions; for a controller-LEO edge it
/// uses the LEO's total outgoing request rate.
pub fn pairwise_costs(
    i: NodeId,
    j: NodeId,
    traffic: &TrafficMatrix,
    snapshot: &NetworkSnapshot,
    overhead: &OverheadParams,
    params: &CorgParams,
) -> PairCosts {
    let (ri, rj) = (snapshot.role(i), snapshot.role(j));
    let class = match (ri, rj) {
        (Role::Leo, Role::Leo) => LinkClass::Isl,
        (Role::Leo, k) | (k, Role::Leo) => LinkClass::controller_link(k),
        _ => LinkClass::InterController,
    };
    let bw = overhead.links.get(class);
    let d = snapshot.distance_km(i, j);
    let rate = match (ri, rj) {
        (Role::Leo, Role::Leo) => traffic.rate(i, j) + traffic.rate(j, i),
        (Role::Leo, _) => outgoing_rate(traffic, i),
        (_, Role::Leo) => outgoing_rate(traffic, j),
        _ => 0.0,
    };
    let mig = if ri == Role::Ground || rj == Role::Ground {
        0.0
    } else {
        direction_divergence(snapshot, i, j, params.mig_unit_s)
    };
    PairCosts {
        flow: rate * hop_delay(overhead.flow_msg_bytes, bw, d),
        sync: overhead.sync_hz * hop_delay(overhead.sync_msg_bytes, bw, d),
        mig,
    }
}

fn outgoing_rate(traffic: &TrafficMatrix, leo: NodeId) -> f64 {
    traffic.rates.range((leo, NodeId(0))..=(leo, NodeId(u32::MAX))).map(|(_, &r)| r).sum()
}

/// `alpha * flow + beta * sync + (1 - alpha - beta) * mig`.
pub fn edge_weight(costs: PairCosts, alpha: f64, beta: f64) -> Result<f64> {
    CorgParams { alpha, beta, mig_unit_s: 0.0 }.validate()?;
    Ok(alpha * costs.flow + beta * costs.sync + (1.0 - alpha - beta) * costs.mig)
}

/// Weighted graph over region LEOs plus one virtual node per competing
/// controller. Edges are keyed by node index pairs `(a, b)` with `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corg {
    node_ids: Vec<NodeId>,
    virtual_flags: Vec<bool>,
    edges: BTreeMap<(usize, usize), f64>,
}

impl Corg {
    /// Builds a graph from explicit nodes and index-pair edges.
    pub fn new(
        node_ids: Vec<NodeId>,
        virtual_flags: Vec<bool>,
        edges: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self> {
        if node_ids.len() != virtual_flags.len() {
            return Err(Error::InvalidParameter { name: "virtual_flags", reason: "length mismatch".into() });
        }
        let n = node_ids.len();
        let mut map = BTreeMap::new();
        for ((a, b), w) in edges {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidParameter { name: "edges", reason: format!("bad edge ({a}, {b})") });
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter { name: "edges", reason: format!("weight {w} on ({a}, {b})") });
            }
            if virtual_flags[a] && virtual_flags[b] {
                return Err(Error::InvalidParameter {
                    name: "edges",
                    reason: format!("edge ({a}, {b}) joins two controllers"),
                });
            }
            map.insert((a.min(b), a.max(b)), w);
        }
        Ok(Self { node_ids, virtual_flags, edges: map })
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    pub fn is_virtual(&self, index: usize) -> bool {
        self.virtual_flags[index]
    }

    pub fn virtual_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.virtual_flags[i]).collect()
    }

    pub fn leo_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.virtual_flags[i]).collect()
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.node_ids.iter().position(|&n| n == id)
    }

    pub fn edges(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.edges
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.edges.get(&(a.min(b), a.max(b))).copied()
    }

    /// Writes `node,node,xi` rows using node ids.
    pub fn write_edge_list<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_a", "node_b", "xi"])?;
        for (&(a, b), &x) in &self.edges {
            w.write_record([self.node_ids[a].to_string(), self.node_ids[b].to_string(), format!("{x:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// CORG for a set of overlap LEOs and the controllers competing for them.
pub fn build_corg(
    leos: &BTreeSet<NodeId>,
    controllers: &[NodeId],
    traffic: &TrafficMatrix,
    snapshot: &NetworkSnapshot,
    coverage: &Coverage,
    overhead: &OverheadParams,
    params: &CorgParams,
) -> Result<Corg> {
    params.validate()?;
    let mut node_ids: Vec<NodeId> = leos.iter().copied().collect();
    let leo_count = node_ids.len();
    let mut sorted = controllers.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    node_ids.extend(&sorted);
    let mut flags = vec![false; leo_count];
    flags.extend(std::iter::repeat_n(true, sorted.len()));

    let index: BTreeMap<NodeId, usize> = node_ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let weight = |a: NodeId, b: NodeId| {
        let c = pairwise_costs(a, b, traffic, snapshot, overhead, params);
        params.alpha * c.flow + params.beta * c.sync + (1.0 - params.alpha - params.beta) * c.mig
    };
    let mut edges = Vec::new();
    for (ia, &a) in node_ids[..leo_count].iter().enumerate() {
        for &b in snapshot.neighbors(a) {
            if b > a {
                if let Some(&ib) = index.get(&b) {
                    edges.push(((ia, ib), weight(a, b)));
                }
            }
        }
        for (off, &k) in sorted.iter().enumerate() {
            if coverage.covers(k, a) {
                edges.push(((ia, leo_count + off), weight(a, k)));
            }
        }
    }
    Corg::new(node_ids, flags, edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub values: DMatrix<f64>,
    pub sigma: f64,
}

/// Kernel bandwidth from the median positive edge weight `m`, chosen so that
/// `2 sigma^2 = 2 m`; an edge of median weight maps to `exp(-1/2)` whatever
/// the units of the weights. Falls back to 1 when no weight is positive.
pub fn median_sigma(corg: &Corg) -> f64 {
    let mut w: Vec<f64> = corg.edges.values().copied().filter(|&x| x > 0.0).collect();
    if w.is_empty() {
        return 1.0;
    }
    w.sort_by(f64::total_cmp);
    let n = w.len();
    let median = if n % 2 == 1 { w[n / 2] } else { 0.5 * (w[n / 2 - 1] + w[n / 2]) };
    median.sqrt()
}

/// `s_ij = exp(-xi_ij / (2 sigma^2))` on edges, 0 elsewhere, 1 on the
/// diagonal.
pub fn similarity(corg: &Corg, sigma: Option<f64>) -> SimilarityMatrix {
    let sigma = sigma.unwrap_or_else(|| median_sigma(corg));
    let n = corg.len();
    let mut values = DMatrix::identity(n, n);
    let denom = 2.0 * sigma * sigma;
    for (&(a, b), &x) in &corg.edges {
        let s = (-x / denom).exp();
        values[(a, b)] = s;
        values[(b, a)] = s;
    }
    SimilarityMatrix { values, sigma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weight_examples() {
        let c = PairCosts { flow: 2.0, sync: 1.0, mig: 1.0 };
        assert_relative_eq!(edge_weight(c, 0.5, 0.3).unwrap(), 1.5, epsilon = 1e-15);
        assert_eq!(edge_weight(c, 1.0, 0.0).unwrap(), 2.0);
        assert_eq!(edge_weight(PairCosts::default(), 0.5, 0.3).unwrap(), 0.0);
        assert!(matches!(edge_weight(c, 0.7, 0.4), Err(Error::InvalidCorgWeights { .. })));
        assert!(edge_weight(c, -0.1, 0.3).is_err());
    }

    #[test]
    fn kernel_values() {
        let corg =
            Corg::new(vec![NodeId(0), NodeId(1), NodeId(2)], vec![false, false, true], [((0, 1), 0.0), ((1, 2), 2.0)])
                .unwrap();
        let s = similarity(&corg, Some(1.0));
        assert_eq!(s.values[(0, 1)], 1.0);
        assert_relative_eq!(s.values[(1, 2)], (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(s.values[(0, 2)], 0.0);
        assert_eq!(s.values[(2, 2)], 1.0);
        assert_eq!(s.values, s.values.transpose());
    }

    #[test]
    fn sigma_median_and_fallback() {
        let corg =
            Corg::new(vec![NodeId(0), NodeId(1), NodeId(2)], vec![false; 3], [((0, 1), 4.0), ((1, 2), 0.0)]).unwrap();
        assert_eq!(median_sigma(&corg), 2.0);
        let zero = Corg::new(vec![NodeId(0), NodeId(1)], vec![false; 2], [((0, 1), 0.0)]).unwrap();
        assert_eq!(median_sigma(&zero), 1.0);
    }

    #[test]
    fn rejects_controller_controller_edge() {
        assert!(Corg::new(vec![NodeId(0), NodeId(1)], vec![true, true], [((0, 1), 1.0)]).is_err());
    }
}
