//! Exact solvers and tour improvement.
//!
//! | solver | instances | practical size |
//! |---|---|---|
//! | [`solve_held_karp`] / [`solve_sop_exact`] | any, precedence-aware | `n <= 18` |
//! | [`solve_one_tree`] | symmetric | `n <= ~80` |
//! | [`solve_bnb`] | any, precedence-aware | small asymmetric and SOP |
//!
//! [`solve_exact`] picks one of them. All accept an optional [`EdgeMask`];
//! removed edges are never used.

mod bnb;
mod held_karp;
mod one_tree;
mod two_opt;

pub use bnb::{bnb_root_bound, solve_bnb};
pub use held_karp::{solve_held_karp, solve_sop_exact};
pub use one_tree::solve_one_tree;
pub use two_opt::improve_2opt;

use crate::error::Result;
use crate::instance::{check_permutation, EdgeMask, Instance, ProblemKind, Tour};
use std::time::{Duration, Instant};

pub const DEFAULT_DP_CAP: usize = 18;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Largest `n` handed to the subset DP.
    pub dp_cap: usize,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Known feasible tour used as the first upper bound.
    pub initial_tour: Option<Vec<usize>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            dp_cap: DEFAULT_DP_CAP,
            time_limit: Some(Duration::from_secs(60)),
            node_limit: None,
            initial_tour: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub tour: Tour,
    /// `true` when optimality was proved, `false` for a best-effort tour.
    pub optimal: bool,
    pub nodes_expanded: u64,
    pub wall_time: Duration,
}

pub(crate) struct Budget {
    start: Instant,
    time: Option<Duration>,
    nodes: Option<u64>,
}

impl Budget {
    pub(crate) fn new(options: &SolveOptions) -> Self {
        Budget {
            start: Instant::now(),
            time: options.time_limit,
            nodes: options.node_limit,
        }
    }

    pub(crate) fn unlimited() -> Self {
        Budget {
            start: Instant::now(),
            time: None,
            nodes: None,
        }
    }

    pub(crate) fn exhausted(&self, nodes: u64) -> bool {
        if self.nodes.is_some_and(|cap| nodes > cap) {
            return true;
        }
        match self.time {
            Some(limit) if nodes.is_multiple_of(256) => self.start.elapsed() > limit,
            _ => false,
        }
    }
}

/// True iff `order` visits every city once, uses only kept edges and
/// respects every precedence pair.
pub fn validate_tour(instance: &Instance, order: &[usize], mask: Option<&EdgeMask>) -> bool {
    if check_permutation(instance.n(), order).is_err() {
        return false;
    }
    if order[0] != 0 && !instance.precedence().is_empty() {
        return false;
    }
    if let Some(m) = mask {
        if m.len() != instance.edge_count() {
            return false;
        }
        let n = order.len();
        if !(0..n).all(|k| m.allows(instance, order[k], order[(k + 1) % n])) {
            return false;
        }
    }
    instance.respects_precedence(order)
}

/// Nearest-neighbour tour `0, first, ...` through kept edges, honouring
/// precedence. `None` when the greedy walk gets stuck.
pub(crate) fn greedy_tour(
    instance: &Instance,
    mask: Option<&EdgeMask>,
    first: usize,
) -> Option<Vec<usize>> {
    let n = instance.n();
    let usable = |i: usize, j: usize| mask.is_none_or(|m| m.allows(instance, i, j));
    let preds = instance.predecessors();
    let mut visited = vec![false; n];
    let ready = |visited: &[bool], j: usize| preds[j].iter().all(|&p| visited[p]);
    visited[0] = true;
    if first == 0 || first >= n || !usable(0, first) || !ready(&visited, first) {
        return None;
    }
    let mut order = vec![0, first];
    visited[first] = true;
    while order.len() < n {
        let cur = *order.last()?;
        let next = (0..n)
            .filter(|&j| !visited[j] && usable(cur, j) && ready(&visited, j))
            .min_by(|&a, &b| instance.cost(cur, a).total_cmp(&instance.cost(cur, b)))?;
        visited[next] = true;
        order.push(next);
    }
    usable(*order.last()?, 0).then_some(order)
}

/// Solves to optimality with the most suitable exact method. When a
/// budget runs out the report carries `optimal = false`.
pub fn solve_exact(
    instance: &Instance,
    mask: Option<&EdgeMask>,
    options: &SolveOptions,
) -> Result<SolveReport> {
    let n = instance.n();
    if n <= options.dp_cap {
        return solve_held_karp(instance, mask, options);
    }
    match instance.kind() {
        ProblemKind::SymmetricTsp => solve_one_tree(instance, mask, options),
        ProblemKind::AsymmetricTsp | ProblemKind::Sop => solve_bnb(instance, mask, options),
    }
}
