use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_ITERATIONS: usize = 100;

fn sq_dist(points: &DMatrix<f64>, i: usize, c: &DVector<f64>) -> f64 {
    points.row(i).iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Lloyd's k-means on the rows of `points` with seeded k-means++ seeding.
/// Returns one label in `0..k` per row. A cluster that empties is reseeded
/// with the point farthest from its current centre.
pub fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Vec<usize> {
    let n = points.nrows();
    if n == 0 || k == 0 {
        return vec![0; n];
    }
    let k = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let row = |i: usize| DVector::from_iterator(points.ncols(), points.row(i).iter().copied());

    let mut centers: Vec<DVector<f64>> = vec![row(rng.random_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = row(pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &c));
        }
        centers.push(c);
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(points, i, c);
                if d < best.0 {
                    best = (d, j);
                }
            }
            if *label != best.1 {
                *label = best.1;
                changed = true;
            }
        }
        for (j, center) in centers.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == j).collect();
            if members.is_empty() {
                continue;
            }
            let mut sum = DVector::zeros(points.ncols());
            for &i in &members {
                sum += row(i);
            }
            *center = sum / members.len() as f64;
        }
        for j in 0..k {
            if labels.contains(&j) {
                continue;
            }
            let mut sizes = vec![0usize; k];
            for &l in &labels {
                sizes[l] += 1;
            }
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(points, a, &centers[labels[a]])
                        .total_cmp(&sq_dist(points, b, &centers[labels[b]]))
                        .then(b.cmp(&a))
                })
                .expect("k <= n leaves a cluster with two points");
            centers[j] = row(far);
            labels[far] = j;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    labels
}
