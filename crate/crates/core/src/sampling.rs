//! Random feasible tours and their objective values.
//!
//! Sampling runs over fixed-size chunks of sample indices. Chunk `k` draws
//! from its own RNG stream derived from `(seed, k)` and chunks are merged in
//! index order, so a batch depends only on `(instance, m, seed)` and never on
//! the number of worker threads.

use crate::error::{Error, Result};
use crate::instance::{check_permutation, Instance, ProblemKind, Tour};
use crate::rng::stream_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

const CHUNK: usize = 256;

/// Default number of samples for an `n`-city instance.
pub fn default_sample_count(n: usize) -> usize {
    100 * n
}

/// `m` feasible tours (flattened, each starting at city 0), their
/// objectives and their 1-based ranks under ascending objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    n: usize,
    tours: Vec<usize>,
    objectives: Vec<f64>,
    rankings: Vec<usize>,
}

impl SampleBatch {
    /// Builds a batch from explicit tours, computing objectives and ranks.
    pub fn from_tours(instance: &Instance, tours: Vec<Vec<usize>>) -> Result<Self> {
        if tours.is_empty() {
            return Err(Error::InvalidArgument("empty sample batch".into()));
        }
        let n = instance.n();
        let mut flat = Vec::with_capacity(tours.len() * n);
        let mut objectives = Vec::with_capacity(tours.len());
        for t in &tours {
            objectives.push(instance.tour_cost(t)?);
            flat.extend_from_slice(t);
        }
        Ok(Self::assemble(n, flat, objectives))
    }

    /// Batch with caller-supplied objectives (used to probe how the
    /// statistical measures react to transformed objective values).
    pub fn with_objectives(&self, objectives: Vec<f64>) -> Result<Self> {
        if objectives.len() != self.m() {
            return Err(Error::SizeMismatch {
                expected: self.m(),
                actual: objectives.len(),
            });
        }
        Ok(Self::assemble(self.n, self.tours.clone(), objectives))
    }

    fn assemble(n: usize, tours: Vec<usize>, objectives: Vec<f64>) -> Self {
        let m = objectives.len();
        let mut order: Vec<usize> = (0..m).collect();
        // stable: ties keep sample-index order
        order.sort_by(|&a, &b| objectives[a].total_cmp(&objectives[b]));
        let mut rankings = vec![0; m];
        for (pos, &k) in order.iter().enumerate() {
            rankings[k] = pos + 1;
        }
        SampleBatch {
            n,
            tours,
            objectives,
            rankings,
        }
    }

    pub fn m(&self) -> usize {
        self.objectives.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tour(&self, k: usize) -> &[usize] {
        &self.tours[k * self.n..(k + 1) * self.n]
    }

    pub fn tours(&self) -> impl Iterator<Item = &[usize]> {
        self.tours.chunks_exact(self.n)
    }

    pub fn objectives(&self) -> &[f64] {
        &self.objectives
    }

    pub fn rankings(&self) -> &[usize] {
        &self.rankings
    }

    /// Indices of samples ordered by rank (best first).
    pub fn ranked_indices(&self) -> Vec<usize> {
        let mut idx = vec![0; self.m()];
        for (k, &r) in self.rankings.iter().enumerate() {
            idx[r - 1] = k;
        }
        idx
    }

    /// Plain-text dump: one line per sample, `objective: c1 c2 ...` (1-based).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, t) in self.tours().enumerate() {
            out.push_str(&format!("{}:", self.objectives[k]));
            for c in t {
                out.push_str(&format!(" {}", c + 1));
            }
            out.push('\n');
        }
        out
    }
}

/// Uniform random permutations with city 0 fixed first. Not for SOP.
pub fn sample_tours(instance: &Instance, m: usize, seed: u64) -> Result<SampleBatch> {
    if instance.kind() == ProblemKind::Sop {
        return Err(Error::InvalidArgument(
            "use sample_sop_tours for SOP instances".into(),
        ));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let n = instance.n();
    let chunks: Vec<(Vec<usize>, Vec<f64>)> = chunk_ranges(m)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = stream_rng(seed, c as u64);
            let mut tours = Vec::with_capacity(len * n);
            let mut objs = Vec::with_capacity(len);
            let mut perm: Vec<usize> = (0..n).collect();
            for _ in 0..len {
                perm[1..].shuffle(&mut rng);
                objs.push(instance.tour_cost_unchecked(&perm));
                tours.extend_from_slice(&perm);
            }
            (tours, objs)
        })
        .collect();
    Ok(merge(n, m, chunks))
}

/// Work counters from the precedence-respecting sampler.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SopWork {
    /// Cities appended to tours.
    pub placements: u64,
    /// Successor-list entries visited while releasing cities.
    pub successor_visits: u64,
}

impl SopWork {
    pub fn total(&self) -> u64 {
        self.placements + self.successor_visits
    }
}

/// Precedence-respecting random tours: repeatedly pick a uniform member of
/// the candidate set and release successors whose outstanding predecessor
/// count drops to zero.
pub fn sample_sop_tours(instance: &Instance, m: usize, seed: u64) -> Result<SampleBatch> {
    sample_sop_tours_instrumented(instance, m, seed).map(|(b, _)| b)
}

pub fn sample_sop_tours_instrumented(
    instance: &Instance,
    m: usize,
    seed: u64,
) -> Result<(SampleBatch, SopWork)> {
    if instance.kind() != ProblemKind::Sop {
        return Err(Error::InvalidArgument(
            "precedence sampling needs an SOP instance".into(),
        ));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let n = instance.n();
    // City 0 is an implicit predecessor of every other city, so the start
    // releases every city without explicit predecessors.
    let mut pending = vec![1u32; n];
    pending[0] = 0;
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
    successors[0] = (1..n).collect();
    for &(a, b) in instance.precedence() {
        if a != 0 {
            successors[a].push(b);
            pending[b] += 1;
        }
    }

    let results: Vec<Result<(Vec<usize>, Vec<f64>, SopWork)>> = chunk_ranges(m)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = stream_rng(seed, c as u64);
            let mut tours = Vec::with_capacity(len * n);
            let mut objs = Vec::with_capacity(len);
            let mut work = SopWork::default();
            let mut remaining = pending.clone();
            let mut candidates: Vec<usize> = Vec::with_capacity(n);
            let mut tour = Vec::with_capacity(n);
            for _ in 0..len {
                remaining.copy_from_slice(&pending);
                candidates.clear();
                candidates.push(0);
                tour.clear();
                while tour.len() < n {
                    if candidates.is_empty() {
                        return Err(Error::Infeasible(
                            "precedence relation leaves no candidate city".into(),
                        ));
                    }
                    let pick = rng.gen_range(0..candidates.len());
                    let v = candidates.swap_remove(pick);
                    tour.push(v);
                    work.placements += 1;
                    for &w in &successors[v] {
                        work.successor_visits += 1;
                        remaining[w] -= 1;
                        if remaining[w] == 0 {
                            candidates.push(w);
                        }
                    }
                }
                objs.push(instance.tour_cost_unchecked(&tour));
                tours.extend_from_slice(&tour);
            }
            Ok((tours, objs, work))
        })
        .collect();

    let mut work = SopWork::default();
    let mut chunks = Vec::with_capacity(results.len());
    for r in results {
        let (t, o, w) = r?;
        work.placements += w.placements;
        work.successor_visits += w.successor_visits;
        chunks.push((t, o));
    }
    Ok((merge(n, m, chunks), work))
}

/// Dispatches to the sampler matching the instance kind.
pub fn sample_feasible(instance: &Instance, m: usize, seed: u64) -> Result<SampleBatch> {
    match instance.kind() {
        ProblemKind::Sop => sample_sop_tours(instance, m, seed),
        _ => sample_tours(instance, m, seed),
    }
}

/// Sum of consecutive edge costs including the closing edge.
pub fn tour_cost(instance: &Instance, order: &[usize]) -> Result<f64> {
    check_permutation(instance.n(), order)?;
    Ok(instance.tour_cost_unchecked(order))
}

/// The rank-1 sample (lowest objective, lowest index on ties).
pub fn best_sample(batch: &SampleBatch) -> Result<Tour> {
    let k = batch
        .rankings()
        .iter()
        .position(|&r| r == 1)
        .ok_or_else(|| Error::InvalidArgument("empty sample batch".into()))?;
    Ok(Tour {
        order: batch.tour(k).to_vec(),
        cost: batch.objectives()[k],
    })
}

fn chunk_ranges(m: usize) -> Vec<(usize, usize)> {
    (0..m.div_ceil(CHUNK))
        .map(|c| (c, CHUNK.min(m - c * CHUNK)))
        .collect()
}

fn merge(n: usize, m: usize, chunks: Vec<(Vec<usize>, Vec<f64>)>) -> SampleBatch {
    let mut tours = Vec::with_capacity(m * n);
    let mut objectives = Vec::with_capacity(m);
    for (t, o) in chunks {
        tours.extend(t);
        objectives.extend(o);
    }
    SampleBatch::assemble(n, tours, objectives)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_random_euclidean;

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
    fn three_city_batch() {
        let batch = sample_tours(&three(), 10, 1).unwrap();
        assert_eq!(batch.m(), 10);
        assert!(batch.objectives().iter().all(|&y| y == 6.0));
        let mut r = batch.rankings().to_vec();
        r.sort_unstable();
        assert_eq!(r, (1..=10).collect::<Vec<_>>());
        // all ties: ranks follow sample index
        assert_eq!(batch.rankings(), &(1..=10).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn best_sample_rules() {
        let inst = generate_random_euclidean(5, 100, 3).unwrap();
        let tours = vec![vec![0, 1, 2, 3, 4], vec![0, 2, 1, 3, 4], vec![0, 4, 3, 2, 1]];
        let batch = SampleBatch::from_tours(&inst, tours).unwrap();
        let batch = batch.with_objectives(vec![20.0, 10.0, 30.0]).unwrap();
        assert_eq!(best_sample(&batch).unwrap().order, vec![0, 2, 1, 3, 4]);
        let tied = batch.with_objectives(vec![10.0, 10.0, 30.0]).unwrap();
        assert_eq!(best_sample(&tied).unwrap().order, vec![0, 1, 2, 3, 4]);
        let single = SampleBatch::from_tours(&inst, vec![vec![0, 4, 3, 2, 1]]).unwrap();
        assert_eq!(best_sample(&single).unwrap().order, vec![0, 4, 3, 2, 1]);
        assert!(SampleBatch::from_tours(&inst, vec![]).is_err());
    }

    #[test]
    fn rejects_wrong_kind_and_zero_m() {
        let sop = Instance::new("s", 4, vec![1.0; 16], ProblemKind::Sop, vec![(2, 3)]).unwrap();
        assert!(sample_tours(&sop, 5, 0).is_err());
        assert!(sample_sop_tours(&three(), 5, 0).is_err());
        assert!(sample_tours(&three(), 0, 0).is_err());
    }

    #[test]
    fn tour_cost_examples() {
        assert_eq!(tour_cost(&three(), &[0, 1, 2]).unwrap(), 6.0);
        assert!(tour_cost(&three(), &[0, 0, 2]).is_err());
        let four = Instance::new(
            "f",
            4,
            vec![0., 1., 15., 2., 1., 0., 6., 7., 15., 6., 0., 3., 2., 7., 3., 0.],
            ProblemKind::SymmetricTsp,
            vec![],
        )
        .unwrap();
        assert_eq!(tour_cost(&four, &[0, 1, 2, 3]).unwrap(), 12.0);
        let flat = Instance::new("u", 5, vec![4.0; 25], ProblemKind::SymmetricTsp, vec![]).unwrap();
        assert_eq!(tour_cost(&flat, &[0, 3, 1, 4, 2]).unwrap(), 20.0);
    }
}
