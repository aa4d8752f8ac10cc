//! K-means over selected topic embeddings, with cluster-count selection from
//! the elbow of the WCSS curve and silhouette local maxima.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lloyd::{self, restart_rng};
use crate::matrix::{distance, Matrix};
use crate::topicmodel::Topic;

pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX: usize = 12;
/// Elbow candidates lie within this fraction of the largest chord distance.
pub const ELBOW_BAND: f64 = 0.05;
/// Below this normalized chord distance the curve counts as a straight line.
const COLLINEAR_EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("k = {k} must satisfy 2 <= k <= {rows} points")]
    BadK { k: usize, rows: usize },
    #[error("restarts must be at least 1")]
    NoRestarts,
    #[error("silhouette needs at least 2 clusters, got {0}")]
    SingleCluster(usize),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("{points} points but {labels} labels")]
    LabelLength { points: usize, labels: usize },
    #[error("elbow detection needs at least 3 curve points, got {0}")]
    ShortCurve(usize),
    #[error("curve k values must be strictly increasing")]
    UnsortedCurve,
    #[error("k range {min}..{max} must span at least 3 values with min >= 2")]
    BadRange { min: usize, max: usize },
    #[error("{selected} selected topics, fewer than the largest k {k_max}")]
    TooFewTopics { selected: usize, k_max: usize },
    #[error("topic {0} has no embedding")]
    MissingEmbedding(u32),
    #[error("report does not cover k = {0}")]
    MissingK(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSolution {
    pub k: usize,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub wcss: f64,
    pub mean_silhouette: f64,
}

/// Best of `restarts` Lloyd runs by WCSS (earliest restart wins ties).
pub fn kmeans(points: &Matrix, k: usize, seed: u64, restarts: usize) -> Result<ClusterSolution, ClusterError> {
    kmeans_with_traces(points, k, seed, restarts).map(|(s, _)| s)
}

/// As [`kmeans`], also returning each restart's per-iteration WCSS trace.
pub fn kmeans_with_traces(
    points: &Matrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<(ClusterSolution, Vec<Vec<f64>>), ClusterError> {
    if k < 2 || k > points.rows() {
        return Err(ClusterError::BadK { k, rows: points.rows() });
    }
    if restarts == 0 {
        return Err(ClusterError::NoRestarts);
    }
    let mut best: Option<lloyd::LloydRun> = None;
    let mut traces = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let run = lloyd::lloyd(points, k, &mut restart_rng(seed, r as u64), lloyd::DEFAULT_MAX_ITER);
        traces.push(run.wcss_trace.clone());
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    let run = best.expect("restarts >= 1");
    let (mean_silhouette, _) = silhouette(points, &run.assignments)?;
    Ok((
        ClusterSolution {
            k,
            assignments: run.assignments,
            centroids: run.centroids,
            wcss: run.wcss,
            mean_silhouette,
        },
        traces,
    ))
}

/// Euclidean silhouette of a hard partition. Points alone in their cluster
/// score 0, as does a point whose `a` and `b` are both zero.
pub fn silhouette(points: &Matrix, assignments: &[usize]) -> Result<(f64, Vec<f64>), ClusterError> {
    let n = points.rows();
    if assignments.len() != n {
        return Err(ClusterError::LabelLength {
            points: n,
            labels: assignments.len(),
        });
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(ClusterError::SingleCluster(k));
    }
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(ClusterError::EmptyCluster(empty));
    }

    let per_point: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = assignments[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[assignments[j]] += distance(points.row(i), points.row(j));
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    let mean = per_point.iter().sum::<f64>() / n as f64;
    Ok((mean, per_point))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElbowResult {
    pub candidates: BTreeSet<usize>,
    /// Set when the curve is (numerically) a straight line.
    pub degenerate: bool,
}

/// Elbow candidates by distance to the chord between the first and last
/// points of the min-max normalized curve.
pub fn detect_elbow(curve: &[(usize, f64)]) -> Result<ElbowResult, ClusterError> {
    if curve.len() < 3 {
        return Err(ClusterError::ShortCurve(curve.len()));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(ClusterError::UnsortedCurve);
    }
    let distances = chord_distances(curve);
    let interior = 1..curve.len() - 1;
    let mut arg = interior.start;
    for i in interior.clone() {
        if distances[i] > distances[arg] {
            arg = i;
        }
    }
    let max = distances[arg];
    if max < COLLINEAR_EPS {
        return Ok(ElbowResult {
            candidates: BTreeSet::from([curve[arg].0]),
            degenerate: true,
        });
    }
    let candidates = interior
        .filter(|&i| distances[i] >= (1.0 - ELBOW_BAND) * max)
        .map(|i| curve[i].0)
        .collect();
    Ok(ElbowResult {
        candidates,
        degenerate: false,
    })
}

/// Perpendicular distance of every normalized curve point to the chord.
pub fn chord_distances(curve: &[(usize, f64)]) -> Vec<f64> {
    let (k0, kn) = (curve[0].0 as f64, curve[curve.len() - 1].0 as f64);
    let wmin = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let wmax = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let wspan = wmax - wmin;
    let norm: Vec<(f64, f64)> = curve
        .iter()
        .map(|&(k, w)| {
            let x = (k as f64 - k0) / (kn - k0);
            let y = if wspan > 0.0 { (w - wmin) / wspan } else { 0.0 };
            (x, y)
        })
        .collect();
    let (x1, y1) = norm[0];
    let (x2, y2) = norm[norm.len() - 1];
    let len = ((x2 - x1).powi(2) + (y2 - y1).powi(2)).sqrt();
    norm.iter()
        .map(|&(x, y)| ((x2 - x1) * (y1 - y) - (x1 - x) * (y2 - y1)).abs() / len)
        .collect()
}

/// Indices of local maxima: strictly above the left neighbour and not below
/// the right one (range ends compare with their single neighbour).
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    if n < 2 {
        return Vec::new();
    }
    (0..n)
        .filter(|&i| match i {
            0 => values[0] > values[1],
            _ if i == n - 1 => values[i] > values[i - 1],
            _ => values[i] > values[i - 1] && values[i] >= values[i + 1],
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub wcss: f64,
    pub mean_silhouette: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionReport {
    pub scores: Vec<KScore>,
    pub chosen_k: usize,
    pub elbow_candidates: BTreeSet<usize>,
    pub silhouette_local_maxima: BTreeSet<usize>,
    pub elbow_degenerate: bool,
    /// Set when `chosen_k` was fixed by the caller rather than selected.
    pub forced: bool,
}

impl KSelectionReport {
    /// Assembles a report from per-k scores, filling in elbow candidates and
    /// silhouette maxima and choosing k by [`select_k`].
    pub fn from_scores(mut scores: Vec<KScore>) -> Result<Self, ClusterError> {
        scores.sort_by_key(|s| s.k);
        let curve: Vec<(usize, f64)> = scores.iter().map(|s| (s.k, s.wcss)).collect();
        let elbow = detect_elbow(&curve)?;
        let sil: Vec<f64> = scores.iter().map(|s| s.mean_silhouette).collect();
        let maxima = local_maxima(&sil).into_iter().map(|i| scores[i].k).collect();
        let mut report = Self {
            chosen_k: scores[0].k,
            scores,
            elbow_candidates: elbow.candidates,
            silhouette_local_maxima: maxima,
            elbow_degenerate: elbow.degenerate,
            forced: false,
        };
        let range = report.scores[0].k..=report.scores[report.scores.len() - 1].k;
        report.chosen_k = select_k(&report, range)?;
        Ok(report)
    }

    pub fn score(&self, k: usize) -> Option<&KScore> {
        self.scores.iter().find(|s| s.k == k)
    }
}

/// Smallest k that is both an elbow candidate and a silhouette local maximum;
/// otherwise the k with the highest silhouette (smaller k on ties).
pub fn select_k(report: &KSelectionReport, k_range: RangeInclusive<usize>) -> Result<usize, ClusterError> {
    let (min, max) = (*k_range.start(), *k_range.end());
    if min < 2 || max < min + 2 {
        return Err(ClusterError::BadRange { min, max });
    }
    let mut in_range = Vec::new();
    for k in k_range.clone() {
        in_range.push(*report.score(k).ok_or(ClusterError::MissingK(k))?);
    }
    if let Some(&k) = report
        .elbow_candidates
        .intersection(&report.silhouette_local_maxima)
        .find(|k| k_range.contains(k))
    {
        return Ok(k);
    }
    let mut best = in_range[0];
    for s in &in_range[1..] {
        if s.mean_silhouette > best.mean_silhouette {
            best = *s;
        }
    }
    Ok(best.k)
}

/// Meta-clustering result keyed by topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicClustering {
    /// Topic ids in input order; `solution.assignments[i]` belongs to `topic_ids[i]`.
    pub topic_ids: Vec<u32>,
    pub solution: ClusterSolution,
}

impl TopicClustering {
    pub fn cluster_of(&self, topic_id: u32) -> Option<usize> {
        self.topic_ids
            .iter()
            .position(|&t| t == topic_id)
            .map(|i| self.solution.assignments[i])
    }

    /// Member topic ids per cluster, in input order.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.solution.k];
        for (&t, &c) in self.topic_ids.iter().zip(&self.solution.assignments) {
            out[c].push(t);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaClusterParams {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub force_k: Option<usize>,
}

impl Default for MetaClusterParams {
    fn default() -> Self {
        Self {
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
            restarts: DEFAULT_RESTARTS,
            force_k: None,
        }
    }
}

pub fn topic_matrix(topics: &[Topic]) -> Result<Matrix, ClusterError> {
    let rows = topics
        .iter()
        .map(|t| {
            t.embedding
                .as_ref()
                .map(|e| e.values().to_vec())
                .ok_or(ClusterError::MissingEmbedding(t.topic_id))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::from_rows(&rows))
}

/// Scores every k in the range, picks k (or uses `force_k`), and returns the
/// final solution at that k.
pub fn cluster_topics(
    selected: &[Topic],
    params: &MetaClusterParams,
    seed: u64,
) -> Result<(KSelectionReport, TopicClustering), ClusterError> {
    let (k_min, k_max) = (params.k_min, params.k_max);
    if k_min < 2 || k_max < k_min + 2 {
        return Err(ClusterError::BadRange { min: k_min, max: k_max });
    }
    if selected.len() < k_max {
        return Err(ClusterError::TooFewTopics {
            selected: selected.len(),
            k_max,
        });
    }
    let points = topic_matrix(selected)?;
    let mut solutions = (k_min..=k_max)
        .into_par_iter()
        .map(|k| kmeans(&points, k, seed, params.restarts))
        .collect::<Result<Vec<_>, _>>()?;
    let scores = solutions
        .iter()
        .map(|s| KScore {
            k: s.k,
            wcss: s.wcss,
            mean_silhouette: s.mean_silhouette,
        })
        .collect();
    let mut report = KSelectionReport::from_scores(scores)?;
    let solution = match params.force_k {
        Some(k) => {
            report.chosen_k = k;
            report.forced = true;
            if (k_min..=k_max).contains(&k) {
                solutions.swap_remove(k - k_min)
            } else {
                kmeans(&points, k, seed, params.restarts)?
            }
        }
        None => solutions.swap_remove(report.chosen_k - k_min),
    };
    Ok((
        report,
        TopicClustering {
            topic_ids: selected.iter().map(|t| t.topic_id).collect(),
            solution,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Matrix {
        let mut rows = Vec::new();
        for i in 0..8 {
            let e = (i as f64) * 0.001;
            rows.push(vec![e, 0.0]);
            rows.push(vec![50.0 + e, 50.0]);
        }
        Matrix::from_rows(&rows)
    }

    #[test]
    fn kmeans_separates_blobs() {
        let s = kmeans(&blobs(), 2, 11, 5).unwrap();
        for (i, &a) in s.assignments.iter().enumerate() {
            assert_eq!(a, s.assignments[i % 2]);
        }
        assert!(s.mean_silhouette > 0.9);
        assert!(matches!(kmeans(&blobs(), 17, 0, 1), Err(ClusterError::BadK { .. })));
        assert!(matches!(kmeans(&blobs(), 2, 0, 0), Err(ClusterError::NoRestarts)));
    }

    #[test]
    fn k_equal_rows_is_exact() {
        let pts = Matrix::from_rows(&[[0.0, 0.0], [1.0, 3.0], [2.0, -1.0]]);
        let s = kmeans(&pts, 3, 5, 3).unwrap();
        assert_eq!(s.wcss, 0.0);
        assert_eq!(s.mean_silhouette, 0.0);
    }

    #[test]
    fn silhouette_limits_and_errors() {
        let pts = Matrix::from_rows(&[[0.0], [0.0], [0.0], [9.0], [9.0], [9.0]]);
        let (mean, per) = silhouette(&pts, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!(mean > 0.99);
        assert!(per.iter().all(|&s| s == 1.0));

        let (mean, _) = silhouette(&pts, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(mean, 0.0);

        assert!(matches!(silhouette(&pts, &[0; 6]), Err(ClusterError::SingleCluster(1))));
        assert!(matches!(silhouette(&pts, &[0, 0, 2, 2, 2, 2]), Err(ClusterError::EmptyCluster(1))));
    }

    #[test]
    fn silhouette_six_point_hand_instance() {
        // 1-d points: cluster 0 = {0, 1, 2}, cluster 1 = {10, 11}, cluster 2 = {30}
        let pts = Matrix::from_rows(&[[0.0], [1.0], [2.0], [10.0], [11.0], [30.0]]);
        let (_, s) = silhouette(&pts, &[0, 0, 0, 1, 1, 2]).unwrap();
        // point 0: a = (1+2)/2 = 1.5, b = min((10+11)/2, 30) = 10.5
        assert!((s[0] - (10.5 - 1.5) / 10.5).abs() < 1e-15);
        // point 1: a = 1, b = (9+10)/2 = 9.5
        assert!((s[1] - 8.5 / 9.5).abs() < 1e-15);
        // point 3: a = 1, b = min((10+9+8)/3, 20) = 9
        assert!((s[3] - 8.0 / 9.0).abs() < 1e-15);
        // point 4: a = 1, b = min((11+10+9)/3, 19) = 10
        assert!((s[4] - 9.0 / 10.0).abs() < 1e-15);
        assert_eq!(s[5], 0.0);
    }

    #[test]
    fn elbow_on_a_sharp_corner() {
        let curve: Vec<(usize, f64)> = (2..=10)
            .map(|k| (k, if k <= 4 { 100.0 - 30.0 * (k - 2) as f64 } else { 40.0 - (k - 4) as f64 }))
            .collect();
        let e = detect_elbow(&curve).unwrap();
        assert_eq!(e.candidates, BTreeSet::from([4]));
        assert!(!e.degenerate);
    }

    #[test]
    fn straight_line_is_degenerate() {
        let curve: Vec<(usize, f64)> = (2..=8).map(|k| (k, 50.0 - 5.0 * k as f64)).collect();
        let e = detect_elbow(&curve).unwrap();
        assert!(e.degenerate);
        assert_eq!(e.candidates.len(), 1);
        assert!(detect_elbow(&curve[..2]).is_err());
        assert!(detect_elbow(&[(3, 1.0), (2, 0.5), (4, 0.1)]).is_err());
    }

    #[test]
    fn reciprocal_curve_matches_brute_force() {
        let curve: Vec<(usize, f64)> = (2..=12).map(|k| (k, 1.0 / k as f64)).collect();
        // brute force with the point-to-line formula on normalized coordinates
        let xs: Vec<f64> = curve.iter().map(|c| (c.0 as f64 - 2.0) / 10.0).collect();
        let ys: Vec<f64> = curve.iter().map(|c| (c.1 - 1.0 / 12.0) / (0.5 - 1.0 / 12.0)).collect();
        // chord from (0, 1) to (1, 0): x + y - 1 = 0
        let d: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x + y - 1.0).abs() / 2f64.sqrt()).collect();
        let max = d.iter().copied().fold(0.0, f64::max);
        let expected: BTreeSet<usize> = (0..d.len()).filter(|&i| d[i] >= 0.95 * max).map(|i| curve[i].0).collect();
        assert_eq!(detect_elbow(&curve).unwrap().candidates, expected);
    }

    fn report(sil: &[(usize, f64)], elbow: &[usize], maxima: &[usize]) -> KSelectionReport {
        KSelectionReport {
            scores: sil
                .iter()
                .map(|&(k, s)| KScore { k, wcss: 100.0 / k as f64, mean_silhouette: s })
                .collect(),
            chosen_k: 0,
            elbow_candidates: elbow.iter().copied().collect(),
            silhouette_local_maxima: maxima.iter().copied().collect(),
            elbow_degenerate: false,
            forced: false,
        }
    }

    #[test]
    fn select_k_rules() {
        let sil: Vec<(usize, f64)> = (2..=10).map(|k| (k, 0.1 + 0.01 * k as f64)).collect();
        assert_eq!(select_k(&report(&sil, &[7], &[7]), 2..=10).unwrap(), 7);
        assert_eq!(select_k(&report(&sil, &[4], &[]), 2..=10).unwrap(), 10);
        assert_eq!(select_k(&report(&sil, &[4, 5], &[5, 9]), 2..=10).unwrap(), 5);
        assert!(select_k(&report(&sil, &[], &[]), 2..=3).is_err());
        let flat: Vec<(usize, f64)> = (2..=6).map(|k| (k, 0.4)).collect();
        assert_eq!(select_k(&report(&flat, &[], &[]), 2..=6).unwrap(), 2);
    }

    #[test]
    fn local_maxima_convention() {
        assert_eq!(local_maxima(&[0.1, 0.3, 0.2, 0.2, 0.5]), vec![1, 4]);
        assert_eq!(local_maxima(&[0.5, 0.3, 0.3]), vec![0]);
        assert_eq!(local_maxima(&[0.1, 0.2, 0.3]), vec![2]);
        assert!(local_maxima(&[0.3, 0.3, 0.3]).is_empty());
    }
}
