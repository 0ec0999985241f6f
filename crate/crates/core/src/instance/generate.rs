//! Random instance generators. Every generator is deterministic in its seed.

use super::{Instance, ProblemKind};
use crate::error::{Error, Result};
use crate::rng::seeded;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::fmt;
use std::str::FromStr;

/// Nearest-integer Euclidean distance (public-library `nint` convention).
pub fn nint_distance(dx: f64, dy: f64) -> f64 {
    ((dx * dx + dy * dy).sqrt() + 0.5).floor()
}

fn check_size(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 cities, got {n}"
        )));
    }
    Ok(())
}

fn euclidean_matrix(points: &[(f64, f64)], exact: bool) -> Vec<f64> {
    let n = points.len();
    let mut costs = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
            let d = if exact {
                (dx * dx + dy * dy).sqrt()
            } else {
                nint_distance(dx, dy)
            };
            costs[i * n + j] = d;
            costs[j * n + i] = d;
        }
    }
    costs
}

/// `n` integer points drawn uniformly from `[0, coord_max]^2`, with
/// nearest-integer Euclidean costs.
pub fn generate_random_euclidean(n: usize, coord_max: u32, seed: u64) -> Result<Instance> {
    check_size(n)?;
    if coord_max < 1 {
        return Err(Error::InvalidArgument("coord_max must be at least 1".into()));
    }
    let mut rng = seeded(seed);
    let points: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(0..=coord_max) as f64,
                rng.gen_range(0..=coord_max) as f64,
            )
        })
        .collect();
    Instance::new(
        format!("euclidean-n{n}-s{seed}"),
        n,
        euclidean_matrix(&points, false),
        ProblemKind::SymmetricTsp,
        vec![],
    )
}

/// Symmetric matrix of independent uniform integer costs in `[1, cost_max]`.
pub fn generate_random_matrix(n: usize, cost_max: u32, seed: u64) -> Result<Instance> {
    check_size(n)?;
    let cost_max = cost_max.max(1);
    let mut rng = seeded(seed);
    let mut costs = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = rng.gen_range(1..=cost_max) as f64;
            costs[i * n + j] = c;
            costs[j * n + i] = c;
        }
    }
    Instance::new(
        format!("random-n{n}-s{seed}"),
        n,
        costs,
        ProblemKind::SymmetricTsp,
        vec![],
    )
}

/// Points scattered around `clusters` uniform centres with a spread of
/// `coord_max / 20`, rounded to integers and clamped to the square.
pub fn generate_clustered_euclidean(
    n: usize,
    coord_max: u32,
    clusters: usize,
    seed: u64,
) -> Result<Instance> {
    check_size(n)?;
    let clusters = clusters.max(1);
    let mut rng = seeded(seed);
    let side = coord_max.max(1) as f64;
    let centres: Vec<(f64, f64)> = (0..clusters)
        .map(|_| (rng.gen_range(0.0..=side), rng.gen_range(0.0..=side)))
        .collect();
    let spread = Normal::new(0.0, side / 20.0).expect("positive spread");
    let points: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let c = centres[rng.gen_range(0..clusters)];
            let x = (c.0 + spread.sample(&mut rng)).round().clamp(0.0, side);
            let y = (c.1 + spread.sample(&mut rng)).round().clamp(0.0, side);
            (x, y)
        })
        .collect();
    Instance::new(
        format!("clustered-n{n}-s{seed}"),
        n,
        euclidean_matrix(&points, false),
        ProblemKind::SymmetricTsp,
        vec![],
    )
}

/// Euclidean instance whose directed costs are independently stretched by a
/// factor in `[1, 1 + skew]` and rounded.
pub fn generate_asymmetric(n: usize, coord_max: u32, skew: f64, seed: u64) -> Result<Instance> {
    let base = generate_random_euclidean(n, coord_max, seed)?;
    let mut rng = seeded(seed ^ 0xA5A5_A5A5);
    let mut costs = base.costs().to_vec();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                costs[i * n + j] = (costs[i * n + j] * (1.0 + rng.gen_range(0.0..=skew))).round();
            }
        }
    }
    Instance::new(
        format!("atsp-n{n}-s{seed}"),
        n,
        costs,
        ProblemKind::AsymmetricTsp,
        vec![],
    )
}

/// Asymmetric instance plus `pairs` random precedence pairs among cities
/// `1..n`, oriented along a random order so the relation is acyclic. For
/// each pair `(a, b)` the cost of the unusable move `b -> a` is set equal to
/// `a -> b`, matching how SOP files store it.
pub fn generate_sop(n: usize, coord_max: u32, pairs: usize, seed: u64) -> Result<Instance> {
    let base = generate_asymmetric(n, coord_max, 0.3, seed)?;
    let mut rng = seeded(seed ^ 0x5EED_0050);
    let mut order: Vec<usize> = (1..n).collect();
    order.shuffle(&mut rng);
    let mut rank = vec![0usize; n];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let max_pairs = (n - 1) * (n - 2) / 2;
    let target = pairs.min(max_pairs);
    let mut chosen = std::collections::BTreeSet::new();
    while chosen.len() < target {
        let a = rng.gen_range(1..n);
        let b = rng.gen_range(1..n);
        if a == b {
            continue;
        }
        let pair = if rank[a] < rank[b] { (a, b) } else { (b, a) };
        chosen.insert(pair);
    }
    let mut costs = base.costs().to_vec();
    for &(a, b) in &chosen {
        costs[b * n + a] = costs[a * n + b];
    }
    Instance::new(
        format!("sop-n{n}-s{seed}"),
        n,
        costs,
        ProblemKind::Sop,
        chosen.into_iter().collect(),
    )
}

/// Generator families used by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Euclidean,
    Clustered,
    Random,
    Atsp,
    Sop,
}

impl Family {
    pub fn generate(self, n: usize, coord_max: u32, seed: u64) -> Result<Instance> {
        match self {
            Family::Euclidean => generate_random_euclidean(n, coord_max, seed),
            Family::Clustered => generate_clustered_euclidean(n, coord_max, (n / 10).max(2), seed),
            Family::Random => generate_random_matrix(n, coord_max, seed),
            Family::Atsp => generate_asymmetric(n, coord_max, 0.3, seed),
            Family::Sop => generate_sop(n, coord_max, n, seed),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Euclidean => "euclidean",
            Family::Clustered => "clustered",
            Family::Random => "random",
            Family::Atsp => "atsp",
            Family::Sop => "sop",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Family::Euclidean),
            "clustered" => Ok(Family::Clustered),
            "random" => Ok(Family::Random),
            "atsp" => Ok(Family::Atsp),
            "sop" => Ok(Family::Sop),
            other => Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }
}
