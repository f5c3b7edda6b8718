//! 1-D K-means over depth values (Lloyd with k-means++ seeding).
//!
//! Used to pick the depth clusters each shift will focus on. Runs on a
//! strided subsample of the map by default; scalar clustering does not need
//! every pixel.

use crate::error::{Error, Result};
use crate::rng::CounterRng;

use super::DepthMap;

/// Subsample cap for clustering a depth map.
const SUBSAMPLE_CAP: usize = 4096;
/// Lloyd iteration cap; convergence is an assignment fixpoint.
const MAX_ITERS: usize = 50;
/// Restarts kept for the best inertia.
const RESTARTS: usize = 10;

/// Result of one clustering: ascending centroids and the total inertia
/// (sum of squared distances to the assigned centroid).
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<f64>,
    pub inertia: f64,
}

fn nearest(centroids: &[f64], v: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &c) in centroids.iter().enumerate() {
        let d = (v - c).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Seeds at the means of the best contiguous two-way split (prefix-sum
/// scan). In 1-D the optimal 2-clustering is contiguous and the midpoint of
/// its cluster means falls inside the split gap, so Lloyd started here
/// reproduces that split exactly; pure k-means++ restarts can miss it when
/// an outlier dominates the distance weights.
fn best_split_seeds(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len();
    let total: f64 = sorted.iter().sum();
    let mut best = (f64::INFINITY, sorted[0], sorted[m - 1]);
    let mut left_sum = 0.0;
    let mut left_sq = 0.0;
    let total_sq: f64 = sorted.iter().map(|v| v * v).sum();
    for s in 1..m {
        left_sum += sorted[s - 1];
        left_sq += sorted[s - 1] * sorted[s - 1];
        let (nl, nr) = (s as f64, (m - s) as f64);
        let right_sum = total - left_sum;
        let inertia =
            (left_sq - left_sum * left_sum / nl) + (total_sq - left_sq - right_sum * right_sum / nr);
        if inertia < best.0 {
            best = (inertia, left_sum / nl, right_sum / nr);
        }
    }
    vec![best.1, best.2]
}

/// Evenly spread quantile seeds over the sorted values.
fn quantile_seeds(values: &[f64], k: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (0..k)
        .map(|i| sorted[((i as f64 + 0.5) / k as f64 * (sorted.len() - 1) as f64).round() as usize])
        .collect()
}

fn kmeans_pp_seed(values: &[f64], k: usize, rng: &CounterRng) -> Vec<f64> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(values[rng.index(0, values.len())]);
    let mut d2: Vec<f64> = values.iter().map(|&v| (v - centroids[0]).powi(2)).collect();
    for j in 1..k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining mass sits on existing centroids; any point works.
            values[rng.index(j as u64, values.len())]
        } else {
            let mut target = rng.uniform(j as u64) * total;
            let mut pick = values.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            values[pick]
        };
        centroids.push(next);
        for (i, &v) in values.iter().enumerate() {
            d2[i] = d2[i].min((v - next).powi(2));
        }
    }
    centroids
}

fn lloyd(values: &[f64], mut centroids: Vec<f64>) -> Clustering {
    let k = centroids.len();
    let mut assign = vec![usize::MAX; values.len()];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (i, &v) in values.iter().enumerate() {
            let a = nearest(&centroids, v);
            if a != assign[i] {
                assign[i] = a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (i, &v) in values.iter().enumerate() {
            sums[assign[i]] += v;
            counts[assign[i]] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            } else {
                // Empty cluster: reseed at the point farthest from its centroid.
                let far = values
                    .iter()
                    .enumerate()
                    .max_by(|(ia, &a), (ib, &b)| {
                        let da = (a - centroids[assign[*ia]]).abs();
                        let db = (b - centroids[assign[*ib]]).abs();
                        da.partial_cmp(&db).unwrap()
                    })
                    .map(|(_, &v)| v)
                    .unwrap_or(centroids[j]);
                centroids[j] = far;
            }
        }
    }
    let inertia = values
        .iter()
        .map(|&v| (v - centroids[nearest(&centroids, v)]).powi(2))
        .sum();
    centroids.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Clustering { centroids, inertia }
}

/// Cluster scalar values into at most `n` groups; best of several seeded
/// restarts. Returns fewer centroids when the data has fewer distinct values
/// or converged centroids coincide.
pub fn kmeans_1d(values: &[f64], n: usize, seed: u64) -> Result<Clustering> {
    if n == 0 {
        return Err(Error::config("cluster count must be >= 1"));
    }
    if values.is_empty() {
        return Err(Error::contract("cannot cluster an empty set"));
    }
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let k = n.min(distinct.len());

    let rng = CounterRng::new(seed).stream(4);
    let mut best: Option<Clustering> = None;
    for restart in 0..RESTARTS {
        let seeds = match restart {
            0 if k == 2 => best_split_seeds(values),
            1 if k >= 2 => quantile_seeds(values, k),
            _ => kmeans_pp_seed(values, k, &rng.stream(restart as u64)),
        };
        let run = lloyd(values, seeds);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    // Collapse coincident centroids so each plane is a distinct target.
    let span = (distinct[distinct.len() - 1] - distinct[0]).abs().max(1.0);
    best.centroids.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * span);
    Ok(best)
}

/// Cluster a depth map's values into `n` ascending centroids.
///
/// By default clusters a uniformly strided subsample of at most 4096 pixels;
/// `full` forces clustering over every pixel.
pub fn kmeans_depth_with(depth: &DepthMap, n: usize, seed: u64, full: bool) -> Result<Vec<f64>> {
    let data = depth.values.as_slice();
    if data.is_empty() {
        return Err(Error::contract("depth map is empty"));
    }
    let stride = if full { 1 } else { (data.len() + SUBSAMPLE_CAP - 1) / SUBSAMPLE_CAP };
    let values: Vec<f64> = data.iter().step_by(stride.max(1)).map(|&v| v as f64).collect();
    Ok(kmeans_1d(&values, n, seed)?.centroids)
}

/// Subsampled clustering of a depth map (the pipeline default).
pub fn kmeans_depth(depth: &DepthMap, n: usize, seed: u64) -> Result<Vec<f64>> {
    kmeans_depth_with(depth, n, seed, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn depth_of(values: &[f32], w: usize, h: usize) -> DepthMap {
        DepthMap { values: Grid::from_vec(w, h, values.to_vec()).unwrap(), timestamp: 0.0 }
    }

    /// Brute-force optimum over every assignment of points to 2 clusters.
    fn exhaustive_two_cluster_inertia(values: &[f64]) -> f64 {
        let n = values.len();
        let mut best = f64::INFINITY;
        for mask in 0..(1u32 << n) {
            let (mut s0, mut c0, mut s1, mut c1) = (0.0, 0usize, 0.0, 0usize);
            for (i, &v) in values.iter().enumerate() {
                if mask >> i & 1 == 0 {
                    s0 += v;
                    c0 += 1;
                } else {
                    s1 += v;
                    c1 += 1;
                }
            }
            if c0 == 0 || c1 == 0 {
                continue;
            }
            let (m0, m1) = (s0 / c0 as f64, s1 / c1 as f64);
            let inertia: f64 = values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if mask >> i & 1 == 0 { (v - m0).powi(2) } else { (v - m1).powi(2) }
                })
                .sum();
            best = best.min(inertia);
        }
        best
    }

    #[test]
    fn uniform_map_single_centroid() {
        let d = depth_of(&[20.0; 16], 4, 4);
        let c = kmeans_depth(&d, 1, 7).unwrap();
        assert_eq!(c, vec![20.0]);
    }

    #[test]
    fn bimodal_six_points_split_exactly() {
        let vals = [10.0, 10.0, 10.0, 40.0, 40.0, 40.0];
        let run = kmeans_1d(&vals, 2, 3).unwrap();
        assert_eq!(run.centroids, vec![10.0, 40.0]);
        let opt = exhaustive_two_cluster_inertia(&vals);
        assert!((run.inertia - opt).abs() < 1e-12);
    }

    #[test]
    fn more_clusters_than_distinct_values_collapse() {
        let d = depth_of(&[5.0, 5.0, 30.0, 30.0], 2, 2);
        let c = kmeans_depth(&d, 3, 1).unwrap();
        assert_eq!(c, vec![5.0, 30.0]);
    }

    #[test]
    fn centroids_stay_inside_data_range() {
        let rng = crate::rng::CounterRng::new(8);
        for case in 0..50u64 {
            let vals: Vec<f64> =
                (0..40).map(|i| rng.uniform_in(case * 100 + i, 1.0, 90.0)).collect();
            let run = kmeans_1d(&vals, 3, case).unwrap();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for &c in &run.centroids {
                assert!((lo..=hi).contains(&c));
            }
            let mut sorted = run.centroids.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(sorted, run.centroids);
        }
    }

    #[test]
    fn best_of_restarts_matches_exhaustive_on_small_instances() {
        let rng = crate::rng::CounterRng::new(99);
        for case in 0..100u64 {
            let len = 2 + (rng.raw(case) % 11) as usize; // 2..=12
            let vals: Vec<f64> =
                (0..len as u64).map(|i| rng.uniform_in(case * 64 + i, 0.0, 100.0)).collect();
            let run = kmeans_1d(&vals, 2, case).unwrap();
            let opt = exhaustive_two_cluster_inertia(&vals);
            assert!(
                run.inertia <= opt + 1e-9,
                "case {case}: lloyd {} vs optimum {opt}",
                run.inertia
            );
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(kmeans_1d(&[], 2, 0).is_err());
        assert!(kmeans_1d(&[1.0], 0, 0).is_err());
    }
}
