//! Depth-first branch-and-bound over partial paths from city 0.
//!
//! Lower bound of a partial path ending at `last` with unvisited set `U`:
//!
//! ```text
//! symmetric: cost + sum_{u in U} (two cheapest usable edges of u) / 2
//!                 + (cheapest last-U edge) / 2 + (cheapest U-0 edge) / 2
//! directed:  cost + cheapest last->U arc + sum_{u in U} cheapest u->(U+0) arc
//! ```
//!
//! Both count every remaining edge at most once, so the bound is admissible
//! for costs of any sign.

use super::{improve_2opt, Budget, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::instance::{EdgeMask, Instance, Tour};
use std::time::Instant;

struct Search<'a> {
    inst: &'a Instance,
    mask: Option<&'a EdgeMask>,
    n: usize,
    /// neighbours of each city sorted by cost, usable edges only
    sorted: Vec<Vec<usize>>,
    /// bitset of predecessors per city
    need: Vec<u128>,
    best_cost: f64,
    best: Option<Vec<usize>>,
    path: Vec<usize>,
    visited: u128,
    nodes: u64,
    budget: Budget,
    aborted: bool,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, mask: Option<&'a EdgeMask>, budget: Budget) -> Self {
        let n = inst.n();
        let usable = |i: usize, j: usize| mask.is_none_or(|m| m.allows(inst, i, j));
        let sorted = (0..n)
            .map(|i| {
                let mut v: Vec<usize> = (0..n).filter(|&j| j != i && usable(i, j)).collect();
                v.sort_by(|&a, &b| inst.cost(i, a).total_cmp(&inst.cost(i, b)));
                v
            })
            .collect();
        let mut need = vec![0u128; n];
        for &(a, b) in inst.precedence() {
            need[b] |= 1 << a;
        }
        Search {
            inst,
            mask,
            n,
            sorted,
            need,
            best_cost: f64::INFINITY,
            best: None,
            path: Vec::with_capacity(n),
            visited: 0,
            nodes: 0,
            budget,
            aborted: false,
        }
    }

    /// Cheapest usable edge from `i` into `targets`.
    fn cheapest_into(&self, i: usize, targets: u128) -> f64 {
        self.sorted[i]
            .iter()
            .find(|&&j| targets & (1 << j) != 0)
            .map_or(f64::INFINITY, |&j| self.inst.cost(i, j))
    }

    fn bound(&self, cost: f64, last: usize) -> f64 {
        let all: u128 = if self.n == 128 { !0 } else { (1u128 << self.n) - 1 };
        let unvisited = all & !self.visited;
        if unvisited == 0 {
            return cost + self.cheapest_into(last, 1);
        }
        let mut b = cost;
        if self.inst.is_directed() {
            b += self.cheapest_into(last, unvisited);
            let targets = unvisited | 1;
            let mut rest = unvisited;
            while rest != 0 {
                let u = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                b += self.cheapest_into(u, targets & !(1 << u));
                if b == f64::INFINITY {
                    return b;
                }
            }
        } else {
            b += 0.5 * self.cheapest_into(last, unvisited);
            b += 0.5 * self.cheapest_into(0, unvisited);
            let targets = unvisited | 1 | (1 << last);
            let mut rest = unvisited;
            while rest != 0 {
                let u = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let allowed = targets & !(1 << u);
                let mut found = 0;
                for &j in &self.sorted[u] {
                    if allowed & (1 << j) != 0 {
                        b += 0.5 * self.inst.cost(u, j);
                        found += 1;
                        if found == 2 {
                            break;
                        }
                    }
                }
                if found < 2 {
                    return f64::INFINITY;
                }
            }
        }
        b
    }

    fn prune_level(&self) -> f64 {
        if self.best_cost == f64::INFINITY {
            return f64::INFINITY;
        }
        self.best_cost - 1e-9 * (1.0 + self.best_cost.abs())
    }

    fn dfs(&mut self, last: usize, cost: f64) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.budget.exhausted(self.nodes) {
            self.aborted = true;
            return;
        }
        if self.path.len() == self.n {
            if self.mask.is_none_or(|m| m.allows(self.inst, last, 0)) {
                let total = cost + self.inst.cost(last, 0);
                if total < self.best_cost {
                    self.best_cost = total;
                    self.best = Some(self.path.clone());
                }
            }
            return;
        }
        let children: Vec<usize> = self.sorted[last]
            .iter()
            .copied()
            .filter(|&j| self.visited & (1 << j) == 0 && self.need[j] & !self.visited == 0 && j != 0)
            .collect();
        for j in children {
            let c = cost + self.inst.cost(last, j);
            self.visited |= 1 << j;
            self.path.push(j);
            if self.bound(c, j) < self.prune_level() {
                self.dfs(j, c);
            }
            self.path.pop();
            self.visited &= !(1 << j);
            if self.aborted {
                return;
            }
        }
    }
}

/// Bound at the root (only city 0 placed).
pub fn bnb_root_bound(instance: &Instance, mask: Option<&EdgeMask>) -> f64 {
    let mut s = Search::new(instance, mask, Budget::unlimited());
    s.visited = 1;
    s.bound(0.0, 0)
}

/// Path branch-and-bound. When the budget runs out the best tour found so
/// far is returned with `optimal = false`.
pub fn solve_bnb(
    instance: &Instance,
    mask: Option<&EdgeMask>,
    options: &SolveOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    let n = instance.n();
    if n > 128 {
        return Err(Error::Solver(format!("n = {n} is beyond the path search")));
    }
    if let Some(m) = mask {
        m.check(instance)?;
    }
    let mut search = Search::new(instance, mask, Budget::new(options));
    // initial upper bound: 2-opt from the given tour and greedy starts
    let mut starts: Vec<Vec<usize>> = options
        .initial_tour
        .iter()
        .filter(|o| super::validate_tour(instance, o, mask))
        .cloned()
        .collect();
    starts.extend((1..n.min(11)).filter_map(|f| super::greedy_tour(instance, mask, f)));
    for order in starts {
        let t = improve_2opt(instance, &Tour::new(instance, order)?, mask);
        if t.cost < search.best_cost {
            search.best_cost = t.cost;
            search.best = Some(t.order);
        }
    }
    search.path.push(0);
    search.visited = 1;
    search.dfs(0, 0.0);

    let optimal = !search.aborted;
    match search.best {
        Some(order) => {
            let mut tour = Tour::new(instance, order)?;
            tour.rotate_to_start();
            Ok(SolveReport {
                tour,
                optimal,
                nodes_expanded: search.nodes,
                wall_time: start.elapsed(),
            })
        }
        None if optimal => Err(Error::Infeasible("no tour uses only kept edges".into())),
        None => Err(Error::Solver("budget exhausted before any tour was found".into())),
    }
}
