//! Lloyd's algorithm with k-means++ seeding, shared by document clustering
//! and topic meta-clustering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::matrix::{pairwise_sum, squared_distance, Matrix};

pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub wcss: f64,
    /// WCSS after every centroid update, ending with the final value.
    pub wcss_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// RNG for one restart. Restarts draw from independent streams of the same
/// seed, so restart `r` behaves identically whatever the total restart count.
pub fn restart_rng(seed: u64, restart: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    rng
}

/// k-means++: first centre uniform, then each next centre drawn with
/// probability proportional to its squared distance to the nearest centre.
pub fn plus_plus_init<R: Rng>(points: &Matrix, k: usize, rng: &mut R) -> Matrix {
    let n = points.rows();
    assert!(k >= 1 && k <= n);
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut nearest: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_distance(p, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total = pairwise_sum(&nearest);
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // every point coincides with a centre already; take any unused index
            let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            unused[rng.random_range(0..unused.len())]
        };
        chosen.push(next);
        let c = points.row(next);
        for (w, p) in nearest.iter_mut().zip(points.iter_rows()) {
            let d = squared_distance(p, c);
            if d < *w {
                *w = d;
            }
        }
    }
    Matrix::from_rows(&chosen.iter().map(|&i| points.row(i)).collect::<Vec<_>>())
}

/// Index of the nearest centroid; the lowest index wins ties.
pub fn nearest_centroid(point: &[f64], centroids: &Matrix) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter_rows().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

pub fn assign_all(points: &Matrix, centroids: &Matrix) -> Vec<usize> {
    (0..points.rows())
        .into_par_iter()
        .map(|i| nearest_centroid(points.row(i), centroids))
        .collect()
}

pub fn wcss(points: &Matrix, assignments: &[usize], centroids: &Matrix) -> f64 {
    let terms: Vec<f64> = points
        .iter_rows()
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, centroids.row(a)))
        .collect();
    pairwise_sum(&terms)
}

pub fn centroids_of(points: &Matrix, assignments: &[usize], k: usize) -> Matrix {
    let mut sums = Matrix::zeros(k, points.cols());
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter_rows().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums.row_mut(a).iter_mut().zip(p) {
            *s += x;
        }
    }
    for (j, &count) in counts.iter().enumerate() {
        if count > 0 {
            let inv = count as f64;
            sums.row_mut(j).iter_mut().for_each(|s| *s /= inv);
        }
    }
    sums
}

/// Moves the point farthest from its centroid (taken from a cluster with at
/// least two members) into each empty cluster.
fn reseed_empty(points: &Matrix, assignments: &mut [usize], centroids: &mut Matrix) {
    let k = centroids.rows();
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for (i, p) in points.iter_rows().enumerate() {
            let a = assignments[i];
            if sizes[a] < 2 {
                continue;
            }
            let d = squared_distance(p, centroids.row(a));
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= rows guarantees a cluster with two members");
        sizes[assignments[i]] -= 1;
        sizes[j] += 1;
        assignments[i] = j;
        centroids.row_mut(j).copy_from_slice(points.row(i));
    }
}

/// One Lloyd run from a k-means++ start. Stops when no assignment changes or
/// after `max_iter` centroid updates. Every cluster is non-empty on return.
pub fn lloyd<R: Rng>(points: &Matrix, k: usize, rng: &mut R, max_iter: usize) -> LloydRun {
    let mut centroids = plus_plus_init(points, k, rng);
    let mut assignments = assign_all(points, &centroids);
    reseed_empty(points, &mut assignments, &mut centroids);

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        iterations += 1;
        centroids = centroids_of(points, &assignments, k);
        trace.push(wcss(points, &assignments, &centroids));
        let mut next = assign_all(points, &centroids);
        reseed_empty(points, &mut next, &mut centroids);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    let final_wcss = wcss(points, &assignments, &centroids);
    if !converged {
        trace.push(final_wcss);
    }
    LloydRun {
        assignments,
        centroids,
        wcss: final_wcss,
        wcss_trace: trace,
        iterations,
        converged,
    }
}
