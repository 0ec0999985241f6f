//! Per-edge feature extraction.
//!
//! Each edge gets six features:
//!
//! * `f1..f4`: the edge cost relative to the minimum (`f1`, `f2`) or mean
//!   (`f3`, `f4`) cost of its source row / target column, scaled by that
//!   row's / column's cost range. Self-loops never enter the statistics.
//! * `f5`: the ranking score `sum_k x_k / r_k` over sampled tours, divided
//!   by its maximum over the graph.
//! * `f6`: the Pearson correlation between edge presence and tour
//!   objective, divided by the most negative correlation in the graph.
//!
//! The statistical measures are accumulated in one pass over the tours'
//! edges, using the binary-variable identities
//! `sum (x - xbar)^2 = xbar (1 - xbar) m` and
//! `sum (x - xbar)(y - ybar) = (1 - xbar) s1 - xbar s0`, so no
//! `m x |E|` presence matrix is ever built.

use crate::error::{Error, Result};
use crate::instance::{check_permutation, Instance, Tour};
use crate::sampling::SampleBatch;
use rayon::prelude::*;
use std::fmt::Write as _;

pub const NUM_FEATURES: usize = 6;

/// Upper bound on the number of partial accumulators; depends only on `m`
/// so merged sums are identical at any thread count.
const MAX_PARTIALS: usize = 16;

/// Per-edge features with optional `+1 / -1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatureTable {
    pub instance_name: String,
    pub edges: Vec<(usize, usize)>,
    pub features: Vec<[f64; NUM_FEATURES]>,
    pub labels: Option<Vec<i8>>,
}

impl EdgeFeatureTable {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// CSV with header `i,j,f1,f2,f3,f4,f5,f6,label` (1-based cities; empty
    /// label column when unlabeled).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,f1,f2,f3,f4,f5,f6,label\n");
        for (r, &(i, j)) in self.edges.iter().enumerate() {
            let _ = write!(out, "{},{}", i + 1, j + 1);
            for f in &self.features[r] {
                let _ = write!(out, ",{f}");
            }
            match &self.labels {
                Some(l) => {
                    let _ = writeln!(out, ",{}", l[r]);
                }
                None => out.push_str(",\n"),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct LineStats {
    min: f64,
    max: f64,
    mean: f64,
}

impl LineStats {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut min, mut max, mut sum, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            count += 1;
        }
        LineStats {
            min,
            max,
            mean: sum / count as f64,
        }
    }

    fn scaled(&self, numerator: f64) -> f64 {
        let range = self.max - self.min;
        if range == 0.0 {
            0.0
        } else {
            numerator / range
        }
    }
}

/// `(f1, f2, f3, f4)` for every edge of the instance's edge universe.
pub fn graph_features(instance: &Instance) -> Vec<[f64; 4]> {
    let n = instance.n();
    let rows: Vec<LineStats> = (0..n)
        .map(|i| LineStats::of((0..n).filter(|&k| k != i).map(|k| instance.cost(i, k))))
        .collect();
    let cols: Vec<LineStats> = (0..n)
        .map(|j| LineStats::of((0..n).filter(|&k| k != j).map(|k| instance.cost(k, j))))
        .collect();
    instance
        .edges()
        .iter()
        .map(|&(i, j)| {
            let c = instance.cost(i, j);
            let (r, col) = (&rows[i], &cols[j]);
            [
                r.scaled(c - r.min),
                col.scaled(c - col.min),
                r.scaled(c - r.mean),
                col.scaled(c - col.mean),
            ]
        })
        .collect()
}

/// Streaming accumulator for the ranking- and correlation-based measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureAccumulator {
    m: usize,
    /// Number of samples containing each edge.
    hits: Vec<u64>,
    rank_score: Vec<f64>,
    /// `s1`: sum of `y_k - ybar` over samples containing the edge.
    dev_sum: Vec<f64>,
    y_mean: f64,
    /// `y_d = sum (y_k - ybar)`
    y_dev: f64,
    /// `sigma_y = sum (y_k - ybar)^2`
    y_var: f64,
}

impl MeasureAccumulator {
    /// Accumulates every sampled tour's edges in one pass.
    pub fn accumulate(instance: &Instance, batch: &SampleBatch) -> Result<Self> {
        if batch.n() != instance.n() {
            return Err(Error::SizeMismatch {
                expected: instance.n(),
                actual: batch.n(),
            });
        }
        let m = batch.m();
        if m == 0 {
            return Err(Error::InvalidArgument("empty sample batch".into()));
        }
        let ys = batch.objectives();
        let y_mean = ys.iter().sum::<f64>() / m as f64;
        let y_dev = ys.iter().map(|y| y - y_mean).sum::<f64>();
        let y_var = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum::<f64>();

        let edges = instance.edge_count();
        let n = instance.n();
        let per = m.div_ceil(MAX_PARTIALS).max(1);
        let ranges: Vec<(usize, usize)> = (0..m)
            .step_by(per)
            .map(|s| (s, (s + per).min(m)))
            .collect();
        let partials: Vec<(Vec<u64>, Vec<f64>, Vec<f64>)> = ranges
            .into_par_iter()
            .map(|(start, end)| {
                let mut hits = vec![0u64; edges];
                let mut rank = vec![0.0; edges];
                let mut dev = vec![0.0; edges];
                for k in start..end {
                    let tour = batch.tour(k);
                    let inv_rank = 1.0 / batch.rankings()[k] as f64;
                    let d = ys[k] - y_mean;
                    for idx in 0..n {
                        let e = instance.edge_index(tour[idx], tour[(idx + 1) % n]);
                        hits[e] += 1;
                        rank[e] += inv_rank;
                        dev[e] += d;
                    }
                }
                (hits, rank, dev)
            })
            .collect();

        let mut hits = vec![0u64; edges];
        let mut rank_score = vec![0.0; edges];
        let mut dev_sum = vec![0.0; edges];
        for (h, r, d) in partials {
            for e in 0..edges {
                hits[e] += h[e];
                rank_score[e] += r[e];
                dev_sum[e] += d[e];
            }
        }
        Ok(MeasureAccumulator {
            m,
            hits,
            rank_score,
            dev_sum,
            y_mean,
            y_dev,
            y_var,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.hits.len()
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_dev(&self) -> f64 {
        self.y_dev
    }

    pub fn y_var(&self) -> f64 {
        self.y_var
    }

    pub fn hits(&self, e: usize) -> u64 {
        self.hits[e]
    }

    /// `xbar`: fraction of samples containing edge `e`.
    pub fn presence_mean(&self, e: usize) -> f64 {
        self.hits[e] as f64 / self.m as f64
    }

    /// `s1` for edge `e`.
    pub fn deviation_sum(&self, e: usize) -> f64 {
        self.dev_sum[e]
    }

    /// `f_r` for edge `e`.
    pub fn ranking_score(&self, e: usize) -> f64 {
        self.rank_score[e]
    }

    pub fn ranking_scores(&self) -> &[f64] {
        &self.rank_score
    }

    /// `sum (x - xbar)^2` via the binary identity.
    pub fn presence_variance_sum(&self, e: usize) -> f64 {
        let x = self.presence_mean(e);
        x * (1.0 - x) * self.m as f64
    }

    /// `sum (x - xbar)(y - ybar)` via the binary identity.
    pub fn covariance_sum(&self, e: usize) -> f64 {
        let x = self.presence_mean(e);
        let s1 = self.dev_sum[e];
        (1.0 - x) * s1 - x * (self.y_dev - s1)
    }

    /// `f_c` for edge `e`; zero when the edge is in none or all samples or
    /// the objectives are constant.
    pub fn correlation(&self, e: usize) -> f64 {
        let h = self.hits[e];
        if h == 0 || h == self.m as u64 || self.y_var <= 0.0 || self.m < 2 {
            return 0.0;
        }
        // objectives constant up to rounding noise
        if self.y_var <= 1e-24 * self.m as f64 * self.y_mean * self.y_mean {
            return 0.0;
        }
        self.covariance_sum(e) / (self.presence_variance_sum(e) * self.y_var).sqrt()
    }

    pub fn correlations(&self) -> Vec<f64> {
        (0..self.edge_count()).map(|e| self.correlation(e)).collect()
    }
}

/// Accumulates and finalises both measures. Correlation needs `m >= 2`;
/// use [`MeasureAccumulator::accumulate`] directly for ranking-only use.
pub fn statistical_measures(instance: &Instance, batch: &SampleBatch) -> Result<MeasureAccumulator> {
    if batch.m() < 2 {
        return Err(Error::InvalidArgument(
            "correlation measure needs at least 2 samples".into(),
        ));
    }
    MeasureAccumulator::accumulate(instance, batch)
}

/// `(f5, f6)` per edge: ranking score over its maximum and correlation over
/// its (most negative) minimum. Degenerate graphs yield zeros.
pub fn normalize_measures(ranking: &[f64], correlation: &[f64]) -> Vec<(f64, f64)> {
    let max_r = ranking.iter().copied().fold(0.0, f64::max);
    let min_c = correlation.iter().copied().fold(0.0, f64::min);
    ranking
        .iter()
        .zip(correlation)
        .map(|(&r, &c)| {
            let f5 = if max_r > 0.0 { r / max_r } else { 0.0 };
            let f6 = if min_c < 0.0 { c / min_c } else { 0.0 };
            (f5, f6)
        })
        .collect()
}

/// `+1` for edges on the given tour, `-1` elsewhere.
pub fn label_edges(instance: &Instance, optimal: &Tour) -> Result<Vec<i8>> {
    check_permutation(instance.n(), &optimal.order)?;
    if !instance.respects_precedence(&optimal.order) {
        return Err(Error::InvalidTour("tour violates a precedence".into()));
    }
    let mut labels = vec![-1i8; instance.edge_count()];
    let n = instance.n();
    for k in 0..n {
        let e = instance.edge_index(optimal.order[k], optimal.order[(k + 1) % n]);
        labels[e] = 1;
    }
    Ok(labels)
}

/// Graph features plus normalised statistical measures, labelled when an
/// optimal tour is supplied.
pub fn build_feature_table(
    instance: &Instance,
    batch: &SampleBatch,
    optimal: Option<&Tour>,
) -> Result<EdgeFeatureTable> {
    let graph = graph_features(instance);
    let acc = statistical_measures(instance, batch)?;
    let stats = normalize_measures(acc.ranking_scores(), &acc.correlations());
    let features = graph
        .iter()
        .zip(&stats)
        .map(|(g, &(f5, f6))| [g[0], g[1], g[2], g[3], f5, f6])
        .collect();
    let labels = optimal.map(|t| label_edges(instance, t)).transpose()?;
    Ok(EdgeFeatureTable {
        instance_name: instance.name().to_string(),
        edges: instance.edges().to_vec(),
        features,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ProblemKind;

    fn three() -> Instance {
        Instance::new(
            "t3",
            3,
            vec![0., 1., 2., 1., 0., 3., 2., 3., 0.],
            ProblemKind::SymmetricTsp,
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn graph_feature_examples() {
        let inst = three();
        let g = graph_features(&inst);
        let e12 = inst.edge_index(0, 1);
        let e13 = inst.edge_index(0, 2);
        assert_eq!(g[e12][0], 0.0);
        assert_eq!(g[e13][0], 1.0);
        assert!((g[e12][2] - -0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_row_gives_zero() {
        let inst = Instance::new("u", 4, vec![5.0; 16], ProblemKind::SymmetricTsp, vec![]).unwrap();
        for f in graph_features(&inst) {
            assert_eq!(f, [0.0; 4]);
        }
    }

    #[test]
    fn ranking_score_example() {
        // m = 3, objectives 10, 20, 30: an edge in samples 1 and 3 scores 1 + 1/3
        let inst = Instance::new("s", 4, vec![1.0; 16], ProblemKind::SymmetricTsp, vec![]).unwrap();
        let tours = vec![vec![0, 1, 2, 3], vec![0, 2, 1, 3], vec![0, 1, 3, 2]];
        let batch = SampleBatch::from_tours(&inst, tours)
            .unwrap()
            .with_objectives(vec![10.0, 20.0, 30.0])
            .unwrap();
        let acc = statistical_measures(&inst, &batch).unwrap();
        let e = inst.edge_index(0, 1);
        assert!((acc.ranking_score(e) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_example() {
        // presence [1,1,0,0] against objectives [10,20,30,40]
        let inst = Instance::new("s", 4, vec![1.0; 16], ProblemKind::SymmetricTsp, vec![]).unwrap();
        let tours = vec![vec![0, 1, 2, 3], vec![0, 1, 3, 2], vec![0, 2, 1, 3], vec![0, 2, 1, 3]];
        let batch = SampleBatch::from_tours(&inst, tours)
            .unwrap()
            .with_objectives(vec![10.0, 20.0, 30.0, 40.0])
            .unwrap();
        let acc = statistical_measures(&inst, &batch).unwrap();
        let e = inst.edge_index(0, 1);
        assert_eq!(acc.hits(e), 2);
        assert!((acc.correlation(e) - (-20.0 / 500f64.sqrt())).abs() < 1e-12);
        let e23 = inst.edge_index(1, 2);
        assert_eq!(acc.hits(e23), 3);
    }

    #[test]
    fn always_present_edge_has_zero_correlation() {
        let inst = three();
        let batch = SampleBatch::from_tours(&inst, vec![vec![0, 1, 2], vec![0, 2, 1]])
            .unwrap()
            .with_objectives(vec![1.0, 2.0])
            .unwrap();
        let acc = statistical_measures(&inst, &batch).unwrap();
        for e in 0..3 {
            assert_eq!(acc.correlation(e), 0.0);
        }
    }

    #[test]
    fn normalization_examples() {
        let fr = [2.0, 1.0, 0.5];
        let fc = [-20.0 / 500f64.sqrt(), 0.2, 0.0];
        let out = normalize_measures(&fr, &fc);
        assert_eq!(out[0].0, 1.0);
        assert_eq!(out[0].1, 1.0);
        assert!((out[1].1 - 0.2 / (-20.0 / 500f64.sqrt())).abs() < 1e-15);
        assert!((out[1].1 + 0.2236).abs() < 1e-4);
        let flat = normalize_measures(&[0.0, 0.0], &[0.1, 0.3]);
        assert_eq!(flat, vec![(0.0, 0.0), (0.0, 0.0)]);
    }

    #[test]
    fn label_counts() {
        let inst = three();
        let labels = label_edges(&inst, &Tour::new(&inst, vec![0, 1, 2]).unwrap()).unwrap();
        assert_eq!(labels, vec![1, 1, 1]);
        let d = Instance::new("d", 4, vec![1.0; 16], ProblemKind::AsymmetricTsp, vec![]).unwrap();
        let labels = label_edges(&d, &Tour::new(&d, vec![0, 1, 2, 3]).unwrap()).unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 4);
        assert_eq!(labels.len(), 12);
        let bad = Tour {
            order: vec![0, 1, 1],
            cost: 0.0,
        };
        assert!(label_edges(&inst, &bad).is_err());
    }

    #[test]
    fn csv_header() {
        let inst = three();
        let batch = crate::sampling::sample_tours(&inst, 4, 0).unwrap();
        let table = build_feature_table(&inst, &batch, None).unwrap();
        let csv = table.to_csv();
        assert!(csv.starts_with("i,j,f1,f2,f3,f4,f5,f6,label\n"));
        assert_eq!(csv.lines().count(), 4);
        assert!(table.labels.is_none());
    }
}
