//! Best-first branch-and-bound for the symmetric TSP with Lagrangian
//! 1-tree bounds (subgradient ascent on node penalties `pi`).
//!
//! Every node fixes some edges in (`1`) or out (`-1`). The 1-tree of a node
//! contains all fixed-in edges and none of the fixed-out ones, so its
//! Lagrangian value bounds every tour in the node's subtree. Branching is
//! binary on a free tree edge at a vertex of degree above two.

use super::{greedy_tour, improve_2opt, validate_tour, Budget, SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::instance::{EdgeMask, Instance, Tour};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

const ROOT_LAMBDA: f64 = 2.0;
const CHILD_LAMBDA: f64 = 0.5;
const MIN_LAMBDA: f64 = 1e-5;

struct Tree {
    value: f64,
    deg: Vec<u32>,
    edges: Vec<(usize, usize)>,
}

enum Ascent {
    Infeasible,
    Tour { order: Vec<usize>, cost: f64 },
    Bound { value: f64, pi: Vec<f64>, tree: Tree },
}

struct Node {
    bound: f64,
    seq: u64,
    state: Vec<i8>,
    pi: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.seq.cmp(&self.seq))
    }
}

struct Solver<'a> {
    inst: &'a Instance,
    n: usize,
    integral: bool,
    ub: f64,
    best: Option<Vec<usize>>,
}

impl<'a> Solver<'a> {
    fn dominated(&self, bound: f64) -> bool {
        if !self.ub.is_finite() {
            return false;
        }
        let tol = 1e-9 * (1.0 + bound.abs());
        if self.integral {
            (bound - tol).ceil() >= self.ub
        } else {
            bound >= self.ub - tol
        }
    }

    fn offer(&mut self, order: Vec<usize>, cost: f64) {
        if cost < self.ub {
            self.ub = cost;
            self.best = Some(order);
        }
    }

    fn one_tree(&self, st: &[i8], pi: &[f64]) -> Option<Tree> {
        let n = self.n;
        let w = |i: usize, j: usize| self.inst.cost(i, j) + pi[i] + pi[j];
        let mut deg = vec![0u32; n];
        let mut edges = Vec::with_capacity(n);
        let mut value = 0.0;

        // spanning tree over 1..n, fixed-in edges take priority
        let mut in_tree = vec![false; n];
        let mut key = vec![f64::INFINITY; n];
        let mut forced = vec![false; n];
        let mut parent = vec![usize::MAX; n];
        in_tree[0] = true;
        let mut v = 1;
        in_tree[1] = true;
        for _ in 0..n - 2 {
            for u in 2..n {
                if in_tree[u] {
                    continue;
                }
                let s = st[v * n + u];
                if s < 0 {
                    continue;
                }
                let f = s > 0;
                let c = w(v, u);
                if (f && !forced[u]) || (f == forced[u] && c < key[u]) {
                    key[u] = c;
                    forced[u] = f;
                    parent[u] = v;
                }
            }
            let mut next = usize::MAX;
            for u in 2..n {
                if in_tree[u] || parent[u] == usize::MAX {
                    continue;
                }
                if next == usize::MAX
                    || (forced[u] && !forced[next])
                    || (forced[u] == forced[next] && key[u] < key[next])
                {
                    next = u;
                }
            }
            if next == usize::MAX {
                return None;
            }
            in_tree[next] = true;
            let p = parent[next];
            value += key[next];
            deg[p] += 1;
            deg[next] += 1;
            edges.push((p, next));
            v = next;
        }

        // two edges at city 0
        let mut cands: Vec<(bool, f64, usize)> = (1..n)
            .filter(|&j| st[j] >= 0)
            .map(|j| (st[j] > 0, w(0, j), j))
            .collect();
        if cands.len() < 2 {
            return None;
        }
        cands.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)));
        for &(_, c, j) in &cands[..2] {
            value += c;
            deg[0] += 1;
            deg[j] += 1;
            edges.push((0, j));
        }
        let total_pi: f64 = pi.iter().sum();
        Some(Tree {
            value: value - 2.0 * total_pi,
            deg,
            edges,
        })
    }

    fn tree_tour(&self, tree: &Tree) -> Vec<usize> {
        let n = self.n;
        let mut adj = vec![Vec::with_capacity(2); n];
        for &(a, b) in &tree.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut order = Vec::with_capacity(n);
        let (mut prev, mut cur) = (usize::MAX, 0);
        for _ in 0..n {
            order.push(cur);
            let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
            prev = cur;
            cur = next;
        }
        order
    }

    fn ascent(&self, st: &[i8], mut pi: Vec<f64>, mut lambda: f64, max_iter: usize) -> Ascent {
        let n = self.n;
        let period = (n / 2).max(5);
        let mut best_value = f64::NEG_INFINITY;
        let mut best_pi = pi.clone();
        let mut best_tree = None;
        let mut stale = 0;
        for _ in 0..max_iter {
            let Some(tree) = self.one_tree(st, &pi) else {
                return Ascent::Infeasible;
            };
            if tree.deg.iter().all(|&d| d == 2) {
                let order = self.tree_tour(&tree);
                let cost = self.inst.tour_cost_unchecked(&order);
                return Ascent::Tour { order, cost };
            }
            let value = tree.value;
            let norm2: f64 = tree.deg.iter().map(|&d| (d as f64 - 2.0).powi(2)).sum();
            let target = if self.ub.is_finite() {
                self.ub
            } else {
                value + 0.05 * value.abs() + 1.0
            };
            let step = lambda * (target - value).max(0.0) / norm2;
            let next_pi: Vec<f64> = pi
                .iter()
                .zip(&tree.deg)
                .map(|(&p, &d)| p + step * (d as f64 - 2.0))
                .collect();
            if value > best_value + 1e-12 * (1.0 + value.abs()) {
                best_value = value;
                best_pi = pi;
                best_tree = Some(tree);
                stale = 0;
                if self.dominated(best_value) {
                    break;
                }
            } else {
                stale += 1;
                if stale >= period {
                    lambda *= 0.5;
                    stale = 0;
                    if lambda < MIN_LAMBDA {
                        break;
                    }
                }
            }
            pi = next_pi;
            if step == 0.0 {
                break;
            }
        }
        match best_tree {
            Some(tree) => Ascent::Bound {
                value: best_value,
                pi: best_pi,
                tree,
            },
            None => Ascent::Infeasible,
        }
    }

    /// Closes the fixings under the degree and subtour rules. Returns
    /// `false` when the node has no feasible tour.
    fn propagate(&self, st: &mut [i8]) -> bool {
        let n = self.n;
        loop {
            let mut changed = false;
            for v in 0..n {
                let row = &st[v * n..(v + 1) * n];
                let inc = (0..n).filter(|&u| u != v && row[u] > 0).count();
                let free = (0..n).filter(|&u| u != v && row[u] == 0).count();
                if inc > 2 || inc + free < 2 {
                    return false;
                }
                if free > 0 && (inc == 2 || inc + free == 2) {
                    let val = if inc == 2 { -1 } else { 1 };
                    for u in 0..n {
                        if u != v && st[v * n + u] == 0 {
                            st[v * n + u] = val;
                            st[u * n + v] = val;
                        }
                    }
                    changed = true;
                }
            }
            // components of fixed-in edges
            let mut root: Vec<usize> = (0..n).collect();
            fn find(root: &mut [usize], mut x: usize) -> usize {
                while root[x] != x {
                    root[x] = root[root[x]];
                    x = root[x];
                }
                x
            }
            let mut size = vec![1usize; n];
            let mut deg = vec![0usize; n];
            for i in 0..n {
                for j in i + 1..n {
                    if st[i * n + j] > 0 {
                        deg[i] += 1;
                        deg[j] += 1;
                        let (a, b) = (find(&mut root, i), find(&mut root, j));
                        if a == b {
                            if size[a] < n {
                                return false;
                            }
                        } else {
                            root[a] = b;
                            size[b] += size[a];
                        }
                    }
                }
            }
            let mut ends: Vec<Vec<usize>> = vec![Vec::new(); n];
            for v in 0..n {
                if deg[v] == 1 {
                    let r = find(&mut root, v);
                    ends[r].push(v);
                }
            }
            for (r, e) in ends.iter().enumerate() {
                if e.len() == 2 && size[r] < n && st[e[0] * n + e[1]] == 0 {
                    st[e[0] * n + e[1]] = -1;
                    st[e[1] * n + e[0]] = -1;
                    changed = true;
                }
            }
            if !changed {
                return true;
            }
        }
    }
}

/// Exact symmetric TSP by 1-tree branch-and-bound.
pub fn solve_one_tree(
    instance: &Instance,
    mask: Option<&EdgeMask>,
    options: &SolveOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    if instance.is_directed() || !instance.precedence().is_empty() {
        return Err(Error::InvalidArgument(
            "1-tree bounds need a symmetric instance without precedence".into(),
        ));
    }
    if let Some(m) = mask {
        m.check(instance)?;
    }
    let n = instance.n();
    let mut solver = Solver {
        inst: instance,
        n,
        integral: instance.has_integer_costs(),
        ub: f64::INFINITY,
        best: None,
    };

    let mut seeds: Vec<Vec<usize>> = Vec::new();
    if let Some(order) = &options.initial_tour {
        if validate_tour(instance, order, mask) {
            seeds.push(order.clone());
        }
    }
    for first in 1..n.min(11) {
        if let Some(order) = greedy_tour(instance, mask, first) {
            seeds.push(order);
        }
    }
    for order in seeds {
        let t = improve_2opt(instance, &Tour::new(instance, order)?, mask);
        solver.offer(t.order, t.cost);
    }

    let mut st = vec![0i8; n * n];
    for i in 0..n {
        st[i * n + i] = -1;
        for j in 0..n {
            if i != j && mask.is_some_and(|m| !m.allows(instance, i, j)) {
                st[i * n + j] = -1;
            }
        }
    }

    let budget = Budget::new(options);
    let mut nodes = 0u64;
    let mut aborted = false;
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    if solver.propagate(&mut st) {
        heap.push(Node {
            bound: f64::NEG_INFINITY,
            seq,
            state: st,
            pi: vec![0.0; n],
        });
    }
    let root_iter = (20 * n).max(1000);
    let child_iter = (2 * n).max(100);

    while let Some(node) = heap.pop() {
        if solver.dominated(node.bound) {
            continue;
        }
        nodes += 1;
        if budget.exhausted(nodes) {
            aborted = true;
            break;
        }
        let (lambda, iters) = if nodes == 1 {
            (ROOT_LAMBDA, root_iter)
        } else {
            (CHILD_LAMBDA, child_iter)
        };
        let (bound, pi, tree) = match solver.ascent(&node.state, node.pi, lambda, iters) {
            Ascent::Infeasible => continue,
            Ascent::Tour { order, cost } => {
                solver.offer(order, cost);
                continue;
            }
            Ascent::Bound { value, pi, tree } => (value.max(node.bound), pi, tree),
        };
        if solver.dominated(bound) {
            continue;
        }
        // branch on the most expensive free tree edge at the busiest vertex
        let v = (0..n)
            .max_by(|&a, &b| tree.deg[a].cmp(&tree.deg[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let Some(&(a, b)) = tree
            .edges
            .iter()
            .filter(|&&(a, b)| (a == v || b == v) && node.state[a * n + b] == 0)
            .max_by(|x, y| {
                let cx = instance.cost(x.0, x.1) + pi[x.0] + pi[x.1];
                let cy = instance.cost(y.0, y.1) + pi[y.0] + pi[y.1];
                cx.total_cmp(&cy)
            })
        else {
            return Err(Error::Solver("no free edge to branch on".into()));
        };
        for val in [-1i8, 1] {
            let mut child = node.state.clone();
            child[a * n + b] = val;
            child[b * n + a] = val;
            if solver.propagate(&mut child) {
                seq += 1;
                heap.push(Node {
                    bound,
                    seq,
                    state: child,
                    pi: pi.clone(),
                });
            }
        }
    }

    match solver.best {
        Some(order) => {
            let mut tour = Tour::new(instance, order)?;
            tour.rotate_to_start();
            Ok(SolveReport {
                tour,
                optimal: !aborted,
                nodes_expanded: nodes,
                wall_time: start.elapsed(),
            })
        }
        None if !aborted => Err(Error::Infeasible("no tour uses only kept edges".into())),
        None => Err(Error::Solver("budget exhausted before any tour was found".into())),
    }
}
