//! Seeded, deterministic k-means over pose feature vectors.
//!
//! k-means++ initialization from a counter-based generator, Lloyd
//! iterations until the largest centroid shift drops below `tol`. The
//! assignment step is data-parallel; centroid updates accumulate in point
//! order so results are identical with and without the `parallel` feature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KmeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid movement.
    pub tol: f64,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams {
            k: 6,
            seed: 42,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

/// A fitted clustering: centroids, per-point assignments, and the inertia
/// trace of the Lloyd iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub seed: u64,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to assigned centroids.
    pub inertia: f64,
    /// Inertia after each assignment pass; non-increasing.
    pub inertia_history: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Nearest centroid and squared distance for every point, sequentially.
pub fn assign_points_seq(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<(usize, f64)> {
    points.iter().map(|p| nearest(p, centroids)).collect()
}

/// Nearest centroid and squared distance for every point; rayon-parallel
/// with the `parallel` feature, with output order independent of schedule.
pub fn assign_points(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<(usize, f64)> {
    #[cfg(feature = "parallel")]
    {
        points.par_iter().map(|p| nearest(p, centroids)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        assign_points_seq(points, centroids)
    }
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count()
}

/// k-means++ seeding: first centroid uniform, the rest sampled with
/// probability proportional to squared distance from the chosen set.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = d2.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // Remaining mass is zero; any distinct point works.
            rng.gen_range(0..points.len())
        };
        centroids.push(points[next].clone());
        let latest = centroids.last().expect("just pushed");
        for (slot, p) in d2.iter_mut().zip(points) {
            let d = squared_distance(p, latest);
            if d < *slot {
                *slot = d;
            }
        }
    }
    centroids
}

/// Cluster `points` into `k` groups. Deterministic for fixed inputs and
/// seed; errors when there are fewer than `k` distinct points.
pub fn kmeans(points: &[Vec<f64>], params: &KmeansParams) -> Result<ClusterModel> {
    if params.k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::Validation("no points to cluster".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Validation("points have mixed dimensions".into()));
    }
    if distinct_count(points) < params.k {
        return Err(Error::Validation(format!(
            "need at least {} distinct points, found fewer",
            params.k
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let centroids = seed_centroids(points, params.k, &mut rng);
    Ok(lloyd_from(points, centroids, params))
}

/// Lloyd iterations from the given starting centroids.
pub(crate) fn lloyd_from(
    points: &[Vec<f64>],
    mut centroids: Vec<Vec<f64>>,
    params: &KmeansParams,
) -> ClusterModel {
    let dim = points[0].len();
    let mut inertia_history = Vec::new();
    let mut assignments: Vec<(usize, f64)>;

    for _ in 0..params.max_iter {
        assignments = assign_points(points, &centroids);
        inertia_history.push(assignments.iter().map(|a| a.1).sum());

        let mut counts = vec![0u64; params.k];
        for &(c, _) in &assignments {
            counts[c] += 1;
        }

        // Reseed empty clusters to the farthest point (ties to the lowest
        // point index), then start the iteration over.
        if counts.contains(&0) {
            let mut d2: Vec<f64> = assignments.iter().map(|a| a.1).collect();
            for cluster in 0..params.k {
                if counts[cluster] > 0 {
                    continue;
                }
                let farthest = d2
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .expect("non-empty points");
                centroids[cluster] = points[farthest].clone();
                d2[farthest] = 0.0;
            }
            continue;
        }

        // Mean of assigned points, accumulated in point order.
        let mut sums = vec![vec![0.0; dim]; params.k];
        for (point, &(c, _)) in points.iter().zip(&assignments) {
            for (slot, v) in sums[c].iter_mut().zip(point) {
                *slot += v;
            }
        }
        let mut shift: f64 = 0.0;
        for (cluster, sum) in sums.iter_mut().enumerate() {
            for v in sum.iter_mut() {
                *v /= counts[cluster] as f64;
            }
            shift = shift.max(squared_distance(sum, &centroids[cluster]).sqrt());
        }
        centroids = std::mem::take(&mut sums);
        if shift < params.tol {
            break;
        }
    }

    // Final fixed-point assignment with the final centroids.
    let final_assignments = assign_points(points, &centroids);
    let inertia = final_assignments.iter().map(|a| a.1).sum();
    inertia_history.push(inertia);
    ClusterModel {
        k: params.k,
        seed: params.seed,
        centroids,
        assignments: final_assignments.into_iter().map(|a| a.0).collect(),
        inertia,
        inertia_history,
    }
}
