//! Edge pruning: the learned reducer and two sampling baselines.
//!
//! Every reducer force-keeps the edges of the best tour it has seen (the
//! guard), so a reduced instance always contains at least one feasible tour.

use crate::error::{Error, Result};
use crate::features::{build_feature_table, statistical_measures};
use crate::instance::{EdgeMask, Instance, Tour};
use crate::rng::stream_rng;
use crate::sampling::{best_sample, sample_feasible, SampleBatch};
use crate::svm::SvmModel;
use rand::Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReductionMethod {
    Mlpr,
    Cbm,
    Cmsa,
}

impl ReductionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ReductionMethod::Mlpr => "mlpr",
            ReductionMethod::Cbm => "cbm",
            ReductionMethod::Cmsa => "cmsa",
        }
    }
}

impl fmt::Display for ReductionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReductionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlpr" => Ok(ReductionMethod::Mlpr),
            "cbm" => Ok(ReductionMethod::Cbm),
            "cmsa" => Ok(ReductionMethod::Cmsa),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionResult {
    pub mask: EdgeMask,
    /// Edge indices of the guard tour, sorted.
    pub guard_edges: Vec<usize>,
    /// The best tour seen while reducing; feasible under `mask`.
    pub guard_tour: Tour,
    /// Kept edges as a percentage of the edge universe.
    pub remaining_fraction: f64,
    pub method: ReductionMethod,
    pub sample_seed: u64,
    /// Number of sampled (or constructed) tours.
    pub m: usize,
}

fn tour_edges(instance: &Instance, order: &[usize]) -> Vec<usize> {
    let n = order.len();
    let mut e: Vec<usize> = (0..n)
        .map(|k| instance.edge_index(order[k], order[(k + 1) % n]))
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}

fn finish(
    instance: &Instance,
    mut mask: EdgeMask,
    guards: &[&[usize]],
    guard_tour: Tour,
    method: ReductionMethod,
    seed: u64,
    m: usize,
) -> ReductionResult {
    for order in guards {
        mask.keep_tour(instance, order);
    }
    let remaining_fraction = 100.0 * mask.kept_count() as f64 / instance.edge_count() as f64;
    ReductionResult {
        guard_edges: tour_edges(instance, &guard_tour.order),
        guard_tour,
        mask,
        remaining_fraction,
        method,
        sample_seed: seed,
        m,
    }
}

/// Learned reduction with the single best sample as guard.
pub fn reduce_mlpr(instance: &Instance, model: &SvmModel, m: usize, seed: u64) -> Result<ReductionResult> {
    reduce_mlpr_with(instance, model, m, seed, 1)
}

/// Learned reduction guarded by the `guard_top_k` best samples.
pub fn reduce_mlpr_with(
    instance: &Instance,
    model: &SvmModel,
    m: usize,
    seed: u64,
    guard_top_k: usize,
) -> Result<ReductionResult> {
    check_m(m)?;
    if guard_top_k == 0 {
        return Err(Error::InvalidArgument("guard_top_k must be at least 1".into()));
    }
    let batch = sample_feasible(instance, m, seed)?;
    let table = build_feature_table(instance, &batch, None)?;
    let labels = model.predict(&table)?;
    let mask = EdgeMask::from_flags(labels.iter().map(|&l| l > 0).collect());
    let ranked = batch.ranked_indices();
    let guards: Vec<&[usize]> = ranked
        .iter()
        .take(guard_top_k)
        .map(|&k| batch.tour(k))
        .collect();
    Ok(finish(
        instance,
        mask,
        &guards,
        best_sample(&batch)?,
        ReductionMethod::Mlpr,
        seed,
        m,
    ))
}

/// Correlation baseline: keeps edges whose presence does not correlate
/// positively with the objective (`f_c <= 0`, so never-sampled edges stay).
pub fn reduce_cbm(instance: &Instance, m: usize, seed: u64) -> Result<ReductionResult> {
    check_m(m)?;
    let batch = sample_feasible(instance, m, seed)?;
    let acc = statistical_measures(instance, &batch)?;
    let mask = EdgeMask::from_flags(acc.correlations().iter().map(|&c| c <= 0.0).collect());
    let best = best_sample(&batch)?;
    let guard = best.order.clone();
    Ok(finish(
        instance,
        mask,
        &[&guard],
        best,
        ReductionMethod::Cbm,
        seed,
        m,
    ))
}

/// Construction baseline: union of `samples` randomized greedy tours from
/// city 0, where the next city is drawn with probability proportional to
/// `1 / (1 + c)` among unvisited (and, for SOP, released) cities.
pub fn reduce_cmsa(instance: &Instance, seed: u64, samples: usize) -> Result<ReductionResult> {
    if samples == 0 {
        return Err(Error::InvalidArgument("CMSA needs at least one sample".into()));
    }
    if let Some(&(i, j)) = instance.edges().iter().find(|&&(i, j)| {
        1.0 + instance.cost(i, j) <= 0.0 || (!instance.is_directed() && 1.0 + instance.cost(j, i) <= 0.0)
    }) {
        return Err(Error::InvalidInstance(format!(
            "CMSA weights need 1 + c > 0, edge ({}, {}) has cost {}",
            i + 1,
            j + 1,
            instance.cost(i, j)
        )));
    }
    let tours: Vec<Vec<usize>> = (0..samples)
        .into_par_iter()
        .map(|k| construct(instance, seed, k as u64))
        .collect();
    let batch = SampleBatch::from_tours(instance, tours)?;
    let mut mask = EdgeMask::none(instance);
    for t in batch.tours() {
        mask.keep_tour(instance, t);
    }
    let best = best_sample(&batch)?;
    let guard = best.order.clone();
    Ok(finish(
        instance,
        mask,
        &[&guard],
        best,
        ReductionMethod::Cmsa,
        seed,
        samples,
    ))
}

fn construct(instance: &Instance, seed: u64, k: u64) -> Vec<usize> {
    let n = instance.n();
    let mut rng = stream_rng(seed, k);
    let mut missing = vec![0usize; n];
    for &(_, b) in instance.precedence() {
        missing[b] += 1;
    }
    let succ = instance.successors();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = 0;
    visited[0] = true;
    order.push(0);
    for &b in &succ[0] {
        missing[b] -= 1;
    }
    let mut weights = Vec::with_capacity(n);
    while order.len() < n {
        weights.clear();
        let mut total = 0.0;
        for j in 0..n {
            if !visited[j] && missing[j] == 0 {
                let w = 1.0 / (1.0 + instance.cost(cur, j));
                total += w;
                weights.push((j, total));
            }
        }
        let r = rng.gen::<f64>() * total;
        let next = weights
            .iter()
            .find(|&&(_, acc)| r < acc)
            .or(weights.last())
            .map(|&(j, _)| j)
            .expect("precedence relation is acyclic, so some city is released");
        visited[next] = true;
        order.push(next);
        for &b in &succ[next] {
            missing[b] -= 1;
        }
        cur = next;
    }
    order
}

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    Ok(())
}
