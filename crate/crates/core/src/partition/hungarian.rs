//! Minimum-cost perfect matching (Kuhn-Munkres) with a deterministic choice
//! among tied optima.

use std::collections::BTreeSet;

use crate::constellation::{NetworkSnapshot, NodeId};
use crate::error::{Error, Result};
use crate::visibility::Coverage;

use super::spectral::Cluster;

/// Square cost matrix; `f64::INFINITY` marks a forbidden pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidParameter { name: "cost", reason: "matrix is not square".into() });
            }
            for v in row {
                if v.is_nan() || v < 0.0 {
                    return Err(Error::InvalidParameter { name: "cost", reason: format!("entry {v}") });
                }
                values.push(v);
            }
        }
        Ok(Self { n, values })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n + c]
    }

    pub fn is_feasible(&self, r: usize, c: usize) -> bool {
        self.get(r, c).is_finite()
    }

    /// Total cost of a row-to-column assignment.
    pub fn total(&self, assignment: &[usize]) -> f64 {
        assignment.iter().enumerate().map(|(r, &c)| self.get(r, c)).sum()
    }

    /// Copy with forbidden entries replaced by a penalty larger than any
    /// feasible matching.
    fn penalized(&self) -> (Vec<f64>, f64) {
        let finite_sum: f64 = self.values.iter().filter(|v| v.is_finite()).sum();
        let big = 2.0 * finite_sum + 1.0;
        let vals = self.values.iter().map(|&v| if v.is_finite() { v } else { big }).collect();
        (vals, big)
    }
}

/// O(n^3) shortest augmenting path solver over a dense finite matrix given as
/// a closure on (row, col) with `n` rows and columns. Returns `col_of_row`.
fn solve(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is the virtual start.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    col_of_row
}

/// Optimal value of the sub-problem on the given rows and columns.
fn sub_optimum(vals: &[f64], n: usize, rows: &[usize], cols: &[usize]) -> f64 {
    let m = rows.len();
    let a = solve(m, |r, c| vals[rows[r] * n + cols[c]]);
    a.iter().enumerate().map(|(r, &c)| vals[rows[r] * n + cols[c]]).sum()
}

/// Minimum-cost perfect matching, choosing the lexicographically smallest
/// column sequence among optimal matchings. Forbidden pairs are avoided when
/// possible; the boolean is false when every perfect matching uses one.
pub fn min_cost_assignment(cost: &CostMatrix) -> (Vec<usize>, bool) {
    let n = cost.n;
    let (vals, big) = cost.penalized();
    let best = sub_optimum(&vals, n, &(0..n).collect::<Vec<_>>(), &(0..n).collect::<Vec<_>>());
    let tol = 1e-9 * best.abs().max(1.0);
    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let mut acc = 0.0;
    for r in 0..n {
        let rest_rows: Vec<usize> = ((r + 1)..n).collect();
        for c in 0..n {
            if used.contains(&c) {
                continue;
            }
            let rest_cols: Vec<usize> = (0..n).filter(|&x| x != c && !used.contains(&x)).collect();
            let total = acc + vals[r * n + c] + sub_optimum(&vals, n, &rest_rows, &rest_cols);
            if total <= best + tol {
                fixed.push(c);
                used.insert(c);
                acc += vals[r * n + c];
                break;
            }
        }
    }
    debug_assert_eq!(fixed.len(), n);
    let feasible = fixed.iter().enumerate().all(|(r, &c)| vals[r * n + c] < big);
    (fixed, feasible)
}

/// Cost of pairing each cluster with each controller: distance from the
/// cluster centroid to the controller, forbidden when a member lies outside
/// that controller's FOV.
pub fn cluster_costs(
    clusters: &[Cluster],
    controllers: &[NodeId],
    snapshot: &NetworkSnapshot,
    coverage: &Coverage,
) -> Result<CostMatrix> {
    if clusters.len() != controllers.len() {
        return Err(Error::InvalidParameter {
            name: "clusters",
            reason: format!("{} clusters for {} controllers", clusters.len(), controllers.len()),
        });
    }
    let rows = clusters
        .iter()
        .map(|cl| {
            controllers
                .iter()
                .map(|&k| {
                    if cl.members.iter().all(|&l| coverage.covers(k, l)) {
                        (cl.centroid - snapshot.position(k)).norm()
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        })
        .collect();
    CostMatrix::from_rows(rows)
}

/// Optimal cluster-to-controller matching; fails with the clusters that
/// cannot be placed when no FOV-feasible perfect matching exists.
pub fn km_match(
    clusters: &[Cluster],
    controllers: &[NodeId],
    snapshot: &NetworkSnapshot,
    coverage: &Coverage,
) -> Result<Vec<NodeId>> {
    let cost = cluster_costs(clusters, controllers, snapshot, coverage)?;
    let (assignment, feasible) = min_cost_assignment(&cost);
    if feasible {
        Ok(assignment.iter().map(|&c| controllers[c]).collect())
    } else {
        let bad = assignment.iter().enumerate().filter(|&(r, &c)| !cost.is_feasible(r, c)).map(|(r, _)| r).collect();
        Err(Error::InfeasibleMatching(bad))
    }
}

/// Like [`km_match`] but always returns the penalized optimum, which places
/// as few clusters on forbidden controllers as possible.
pub fn km_match_relaxed(
    clusters: &[Cluster],
    controllers: &[NodeId],
    snapshot: &NetworkSnapshot,
    coverage: &Coverage,
) -> Result<Vec<NodeId>> {
    let cost = cluster_costs(clusters, controllers, snapshot, coverage)?;
    let (assignment, _) = min_cost_assignment(&cost);
    Ok(assignment.iter().map(|&c| controllers[c]).collect())
}
