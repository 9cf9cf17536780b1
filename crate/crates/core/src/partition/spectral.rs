//! Spectral clustering of a CORG into as many clusters as there are competing
//! controllers.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::constellation::{angle_between, NetworkSnapshot, NodeId, Vec3};
use crate::corg::{similarity, Corg};
use crate::visibility::Coverage;

use super::eigen::dense_eigen;
use super::kmeans::kmeans;

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: BTreeSet<NodeId>,
    /// Mean ECEF position of the members, in km.
    pub centroid: Vec3,
    /// Controller whose virtual node landed in this cluster, if exactly one.
    pub attached: Option<NodeId>,
}

/// `Deg^-1/2 (Deg - S) Deg^-1/2` with degrees taken as row sums of `S`.
pub fn laplacian(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = s.row(i).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let l = if i == j { s.row(i).sum() - s[(i, i)] } else { -s[(i, j)] };
        inv_sqrt[i] * l * inv_sqrt[j]
    })
}

/// Eigenvalues (ascending) of the normalized Laplacian and the row-normalized
/// embedding formed by the eigenvectors of the `m` smallest.
pub fn spectral_embedding(s: &DMatrix<f64>, m: usize) -> (Vec<f64>, DMatrix<f64>) {
    let (values, vectors) = dense_eigen(&laplacian(s));
    let m = m.min(values.len());
    (values, row_normalized(vectors.columns(0, m).into_owned()))
}

fn row_normalized(mut emb: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..emb.nrows() {
        let norm = emb.row(i).norm();
        if norm > 0.0 {
            emb.row_mut(i).unscale_mut(norm);
        }
    }
    emb
}

/// Eigenvectors of the `m` smallest eigenvalues of the normalized Laplacian
/// of `s`.
fn smallest_eigenvectors(s: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let (values, vectors) = dense_eigen(&laplacian(s));
    vectors.columns(0, m.min(values.len())).into_owned()
}

/// Labels from the pure spectral step, before any geometry is consulted.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLabels {
    pub labels: Vec<usize>,
    /// Number of edge removals performed to separate controllers.
    pub retries: usize,
    /// True when two virtual nodes still share a cluster after all retries.
    pub conflict: bool,
}

fn conflicting_virtuals(corg: &Corg, labels: &[usize], m: usize) -> Vec<usize> {
    let mut by_label = vec![Vec::new(); m];
    for v in corg.virtual_indices() {
        by_label[labels[v]].push(v);
    }
    by_label.into_iter().filter(|g| g.len() >= 2).flatten().collect()
}

/// Embeds the CORG, runs k-means with `k = m`, and while controllers share a
/// cluster removes the most similar edge of each of them and retries, at most
/// once per node.
pub fn spectral_labels(corg: &Corg, m: usize, seed: u64) -> SpectralLabels {
    let n = corg.len();
    let mut s = similarity(corg, None).values;
    let mut retries = 0;
    loop {
        let labels = kmeans(&row_normalized(smallest_eigenvectors(&s, m)), m, seed);
        let conflicted = conflicting_virtuals(corg, &labels, m);
        if conflicted.is_empty() {
            return SpectralLabels { labels, retries, conflict: false };
        }
        if retries >= n {
            return SpectralLabels { labels, retries, conflict: true };
        }
        // Each co-clustered controller loses its most similar remaining edge.
        let mut removed = false;
        for &v in &conflicted {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..n {
                if j != v && s[(v, j)] > 0.0 && best.is_none_or(|(b, _)| s[(v, j)] > b) {
                    best = Some((s[(v, j)], j));
                }
            }
            if let Some((_, j)) = best {
                s[(v, j)] = 0.0;
                s[(j, v)] = 0.0;
                removed = true;
            }
        }
        if !removed {
            return SpectralLabels { labels, retries, conflict: true };
        }
        retries += 1;
    }
}

/// Normalized cut of a labelling: `sum_c cut(c, rest) / vol(c)` with volumes
/// from row sums of `s`.
pub fn normalized_cut(s: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let k = labels.iter().copied().max().map_or(0, |x| x + 1);
    let n = s.nrows();
    let mut total = 0.0;
    for c in 0..k {
        let mut cut = 0.0;
        let mut vol = 0.0;
        for i in (0..n).filter(|&i| labels[i] == c) {
            vol += s.row(i).sum();
            cut += (0..n).filter(|&j| labels[j] != c).map(|j| s[(i, j)]).sum::<f64>();
        }
        if vol > 0.0 {
            total += cut / vol;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOutcome {
    /// One cluster per controller. After a clean run `attached` is set on
    /// every cluster; after the fallback every cluster is also attached but
    /// built from nearest-controller rules.
    pub clusters: Vec<Cluster>,
    pub retries: usize,
    pub fallback: bool,
}

fn centroid(members: &BTreeSet<NodeId>, snapshot: &NetworkSnapshot, default: Vec3) -> Vec3 {
    if members.is_empty() {
        return default;
    }
    members.iter().map(|&l| *snapshot.position(l)).sum::<Vec3>() / members.len() as f64
}

fn nearest(leo: NodeId, candidates: &[NodeId], snapshot: &NetworkSnapshot) -> Option<NodeId> {
    candidates.iter().copied().min_by(|&a, &b| {
        let da = angle_between(snapshot.position(leo), snapshot.position(a));
        let db = angle_between(snapshot.position(leo), snapshot.position(b));
        da.total_cmp(&db).then(a.cmp(&b))
    })
}

/// Spectral clustering of a region CORG into `m` clusters with virtual
/// controller nodes stripped from the membership. When controllers cannot be
/// separated, every LEO in a conflicted or controller-less cluster goes to
/// its nearest controller among those that can see it.
pub fn spectral_cluster(
    corg: &Corg,
    m: usize,
    seed: u64,
    snapshot: &NetworkSnapshot,
    coverage: &Coverage,
) -> SpectralOutcome {
    let result = spectral_labels(corg, m, seed);
    let ids = corg.node_ids();
    let virtuals: Vec<usize> = corg.virtual_indices();
    let controllers: Vec<NodeId> = virtuals.iter().map(|&v| ids[v]).collect();

    if !result.conflict {
        let clusters = (0..m)
            .map(|c| {
                let members: BTreeSet<NodeId> =
                    corg.leo_indices().into_iter().filter(|&i| result.labels[i] == c).map(|i| ids[i]).collect();
                let attached = virtuals.iter().find(|&&v| result.labels[v] == c).map(|&v| ids[v]);
                let default = attached.map(|k| *snapshot.position(k)).unwrap_or_else(Vec3::zeros);
                Cluster { centroid: centroid(&members, snapshot, default), members, attached }
            })
            .collect();
        return SpectralOutcome { clusters, retries: result.retries, fallback: false };
    }

    let mut groups: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); controllers.len()];
    for i in corg.leo_indices() {
        let label = result.labels[i];
        let here: Vec<NodeId> = virtuals.iter().filter(|&&v| result.labels[v] == label).map(|&v| ids[v]).collect();
        let leo = ids[i];
        let visible: Vec<NodeId> = controllers.iter().copied().filter(|&k| coverage.covers(k, leo)).collect();
        let target = match here.as_slice() {
            [only] if coverage.covers(*only, leo) => Some(*only),
            _ => {
                let preferred: Vec<NodeId> = here.iter().copied().filter(|k| visible.contains(k)).collect();
                nearest(leo, if preferred.is_empty() { &visible } else { &preferred }, snapshot)
                    .or_else(|| nearest(leo, &controllers, snapshot))
            }
        };
        if let Some(k) = target {
            let slot = controllers.iter().position(|&c| c == k).expect("target is a controller");
            groups[slot].insert(leo);
        }
    }
    let clusters = controllers
        .iter()
        .zip(groups)
        .map(|(&k, members)| Cluster {
            centroid: centroid(&members, snapshot, *snapshot.position(k)),
            members,
            attached: Some(k),
        })
        .collect();
    SpectralOutcome { clusters, retries: result.retries, fallback: true }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_components() -> Corg {
        // Nodes 0,1,4 form one component and 2,3,5 the other; 4 and 5 are
        // virtual controllers.
        Corg::new(
            (0..6).map(NodeId).collect(),
            vec![false, false, false, false, true, true],
            [((0, 1), 0.1), ((0, 4), 0.2), ((1, 4), 0.3), ((2, 3), 0.1), ((2, 5), 0.2), ((3, 5), 0.1)],
        )
        .unwrap()
    }

    #[test]
    fn laplacian_psd_and_components() {
        let corg = two_components();
        let s = similarity(&corg, None).values;
        let l = laplacian(&s);
        assert!((l.clone() - l.transpose()).abs().max() < 1e-12);
        let (vals, _) = spectral_embedding(&s, 2);
        assert!(vals[0] > -1e-9);
        let zeros = vals.iter().filter(|v| v.abs() < 1e-9).count();
        assert_eq!(zeros, 2);
    }

    #[test]
    fn recovers_components() {
        let corg = two_components();
        let r = spectral_labels(&corg, 2, 3);
        assert!(!r.conflict);
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[0], r.labels[4]);
        assert_eq!(r.labels[2], r.labels[5]);
        assert_ne!(r.labels[0], r.labels[2]);
    }

    #[test]
    fn ncut_of_split_components_is_zero() {
        let corg = two_components();
        let s = similarity(&corg, None).values;
        assert_eq!(normalized_cut(&s, &[0, 0, 1, 1, 0, 1]), 0.0);
        assert!(normalized_cut(&s, &[0, 1, 0, 1, 0, 1]) > 0.0);
    }
}
