//! Problem data model: cost matrices, edge universes, masks and tours.
//!
//! Cities are 0-based in memory and 1-based in every text format.

mod export;
mod generate;
mod tsplib;

pub use export::{parse_reduced, write_mtz_lp, write_reduced, ReducedMode};
pub use generate::{
    generate_asymmetric, generate_clustered_euclidean, generate_random_euclidean,
    generate_random_matrix, generate_sop, nint_distance, Family,
};
pub use tsplib::{parse_tsplib, parse_tsplib_with, write_tsplib, ParseOptions};

use crate::error::{Error, Result};

/// The three problem variants handled by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    SymmetricTsp,
    AsymmetricTsp,
    Sop,
}

impl ProblemKind {
    pub fn is_directed(self) -> bool {
        !matches!(self, ProblemKind::SymmetricTsp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::SymmetricTsp => "symmetric-tsp",
            ProblemKind::AsymmetricTsp => "asymmetric-tsp",
            ProblemKind::Sop => "sop",
        }
    }
}

/// A TSP / ATSP / SOP instance. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    name: String,
    n: usize,
    costs: Vec<f64>,
    kind: ProblemKind,
    precedence: Vec<(usize, usize)>,
    edges: Vec<(usize, usize)>,
}

impl Instance {
    /// Builds an instance from a row-major `n * n` cost matrix. The diagonal
    /// is ignored. Precedence pairs `(a, b)` mean city `a` is visited before
    /// city `b`.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        costs: Vec<f64>,
        kind: ProblemKind,
        precedence: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInstance(format!(
                "need at least 3 cities, got {n}"
            )));
        }
        if costs.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                actual: costs.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && !costs[i * n + j].is_finite() {
                    return Err(Error::InvalidInstance(format!(
                        "non-finite cost at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if kind == ProblemKind::SymmetricTsp {
            for i in 0..n {
                for j in (i + 1)..n {
                    if costs[i * n + j] != costs[j * n + i] {
                        return Err(Error::InvalidInstance(format!(
                            "symmetric instance has c({},{}) != c({},{})",
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1
                        )));
                    }
                }
            }
        }
        if kind != ProblemKind::Sop && !precedence.is_empty() {
            return Err(Error::InvalidInstance(
                "precedence pairs are only allowed on SOP instances".into(),
            ));
        }
        let mut precedence = precedence;
        precedence.sort_unstable();
        precedence.dedup();
        check_precedence(n, &precedence)?;

        let edges = if kind.is_directed() {
            (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .collect()
        } else {
            (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect()
        };

        Ok(Instance {
            name: name.into(),
            n,
            costs,
            kind,
            precedence,
            edges,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn is_directed(&self) -> bool {
        self.kind.is_directed()
    }

    pub fn precedence(&self) -> &[(usize, usize)] {
        &self.precedence
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.n + j]
    }

    /// Row-major cost matrix including the (unused) diagonal.
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// Size of the edge universe: `n(n-1)/2` undirected or `n(n-1)` directed.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical endpoints of edge `e` (`i < j` when undirected).
    #[inline]
    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Index of the edge traversed when moving from `i` to `j`. For
    /// undirected instances both directions map to the same index.
    #[inline]
    pub fn edge_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j && i < self.n && j < self.n);
        let n = self.n;
        if self.kind.is_directed() {
            i * (n - 1) + if j < i { j } else { j - 1 }
        } else {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            a * n - a * (a + 1) / 2 + (b - a - 1)
        }
    }

    /// True when every cost off the diagonal is an integer.
    pub fn has_integer_costs(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| (0..n).all(|j| i == j || self.costs[i * n + j].fract() == 0.0))
    }

    /// Sum of `|c|` over the edge universe.
    pub fn abs_cost_sum(&self) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j)| self.cost(i, j).abs())
            .sum()
    }

    /// Per-city list of direct predecessors from the precedence relation.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.n];
        for &(a, b) in &self.precedence {
            preds[b].push(a);
        }
        preds
    }

    /// Per-city list of direct successors from the precedence relation.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.n];
        for &(a, b) in &self.precedence {
            succ[a].push(b);
        }
        succ
    }

    /// Cost of a closed tour given as a permutation of `0..n`.
    pub fn tour_cost(&self, order: &[usize]) -> Result<f64> {
        check_permutation(self.n, order)?;
        Ok(self.tour_cost_unchecked(order))
    }

    pub(crate) fn tour_cost_unchecked(&self, order: &[usize]) -> f64 {
        let n = order.len();
        let mut total = 0.0;
        for k in 0..n {
            total += self.cost(order[k], order[(k + 1) % n]);
        }
        total
    }

    /// True when every precedence pair is respected by `order`.
    pub fn respects_precedence(&self, order: &[usize]) -> bool {
        if self.precedence.is_empty() {
            return true;
        }
        let mut pos = vec![usize::MAX; self.n];
        for (p, &c) in order.iter().enumerate() {
            if c < self.n {
                pos[c] = p;
            }
        }
        self.precedence.iter().all(|&(a, b)| pos[a] < pos[b])
    }
}

fn check_precedence(n: usize, pairs: &[(usize, usize)]) -> Result<()> {
    let mut indegree = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in pairs {
        if a >= n || b >= n {
            return Err(Error::InvalidInstance(format!(
                "precedence ({}, {}) out of range",
                a + 1,
                b + 1
            )));
        }
        if a == b {
            return Err(Error::InvalidInstance(format!(
                "city {} cannot precede itself",
                a + 1
            )));
        }
        if b == 0 {
            return Err(Error::InvalidInstance(format!(
                "start city cannot be preceded (pair {} -> 1)",
                a + 1
            )));
        }
        indegree[b] += 1;
        succ[a].push(b);
    }
    // Kahn's algorithm
    let mut stack: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &w in &succ[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                stack.push(w);
            }
        }
    }
    if seen != n {
        return Err(Error::InvalidInstance("cyclic precedence relation".into()));
    }
    Ok(())
}

pub(crate) fn check_permutation(n: usize, order: &[usize]) -> Result<()> {
    if order.len() != n {
        return Err(Error::InvalidTour(format!(
            "expected {n} cities, got {}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n {
            return Err(Error::InvalidTour(format!("city {} out of range", c + 1)));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::InvalidTour(format!("city {} repeated", c + 1)));
        }
    }
    Ok(())
}

/// Kept/removed flag for every edge of an instance's edge universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMask {
    kept: Vec<bool>,
}

impl EdgeMask {
    pub fn all(instance: &Instance) -> Self {
        EdgeMask {
            kept: vec![true; instance.edge_count()],
        }
    }

    pub fn none(instance: &Instance) -> Self {
        EdgeMask {
            kept: vec![false; instance.edge_count()],
        }
    }

    pub fn from_flags(kept: Vec<bool>) -> Self {
        EdgeMask { kept }
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn flags(&self) -> &[bool] {
        &self.kept
    }

    #[inline]
    pub fn is_kept(&self, e: usize) -> bool {
        self.kept[e]
    }

    pub fn set(&mut self, e: usize, keep: bool) {
        self.kept[e] = keep;
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    /// Whether moving from `i` to `j` is allowed.
    #[inline]
    pub fn allows(&self, instance: &Instance, i: usize, j: usize) -> bool {
        self.kept[instance.edge_index(i, j)]
    }

    /// Marks every edge traversed by the closed tour `order` as kept.
    pub fn keep_tour(&mut self, instance: &Instance, order: &[usize]) {
        let n = order.len();
        for k in 0..n {
            let e = instance.edge_index(order[k], order[(k + 1) % n]);
            self.kept[e] = true;
        }
    }

    pub fn check(&self, instance: &Instance) -> Result<()> {
        if self.kept.len() != instance.edge_count() {
            return Err(Error::SizeMismatch {
                expected: instance.edge_count(),
                actual: self.kept.len(),
            });
        }
        Ok(())
    }
}

/// A closed tour starting at city 0, with its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub cost: f64,
}

impl Tour {
    pub fn new(instance: &Instance, order: Vec<usize>) -> Result<Self> {
        let cost = instance.tour_cost(&order)?;
        Ok(Tour { order, cost })
    }

    /// Rotates the tour so that it starts at city 0.
    pub fn rotate_to_start(&mut self) {
        if let Some(p) = self.order.iter().position(|&c| c == 0) {
            self.order.rotate_left(p);
        }
    }

    /// 1-based rendering, e.g. `1-2-3-1`.
    pub fn display_one_based(&self) -> String {
        let mut parts: Vec<String> = self.order.iter().map(|c| (c + 1).to_string()).collect();
        if let Some(first) = self.order.first() {
            parts.push((first + 1).to_string());
        }
        parts.join("-")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn undirected_indexing_is_a_bijection() {
        for n in 3..12 {
            let inst = Instance::new(
                "x",
                n,
                vec![1.0; n * n],
                ProblemKind::SymmetricTsp,
                vec![],
            )
            .unwrap();
            assert_eq!(inst.edge_count(), n * (n - 1) / 2);
            for (e, &(i, j)) in inst.edges().iter().enumerate() {
                assert!(i < j);
                assert_eq!(inst.edge_index(i, j), e);
                assert_eq!(inst.edge_index(j, i), e);
            }
        }
    }

    #[test]
    fn directed_indexing_is_a_bijection() {
        let n = 6;
        let inst = Instance::new(
            "x",
            n,
            vec![1.0; n * n],
            ProblemKind::AsymmetricTsp,
            vec![],
        )
        .unwrap();
        assert_eq!(inst.edge_count(), 30);
        for (e, &(i, j)) in inst.edges().iter().enumerate() {
            assert_eq!(inst.edge_index(i, j), e);
        }
    }

    #[test]
    fn rejects_asymmetric_symmetric_instance() {
        let err = Instance::new(
            "bad",
            3,
            vec![0., 1., 2., 5., 0., 3., 2., 3., 0.],
            ProblemKind::SymmetricTsp,
            vec![],
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_cyclic_and_start_preceded() {
        let c = vec![1.0; 16];
        assert!(Instance::new("c", 4, c.clone(), ProblemKind::Sop, vec![(1, 2), (2, 1)]).is_err());
        assert!(Instance::new("c", 4, c.clone(), ProblemKind::Sop, vec![(2, 0)]).is_err());
        assert!(Instance::new("c", 4, c, ProblemKind::Sop, vec![(1, 2), (2, 3)]).is_ok());
    }

    #[test]
    fn tour_cost_closes_the_cycle() {
        let inst = three();
        assert_eq!(inst.tour_cost(&[0, 1, 2]).unwrap(), 6.0);
        assert!(inst.tour_cost(&[0, 1, 1]).is_err());
        assert!(inst.tour_cost(&[0, 1]).is_err());
    }

    #[test]
    fn mask_keep_tour() {
        let inst = three();
        let mut mask = EdgeMask::none(&inst);
        mask.keep_tour(&inst, &[0, 1, 2]);
        assert_eq!(mask.kept_count(), 3);
    }

    #[test]
    fn display_tour() {
        let inst = three();
        let t = Tour::new(&inst, vec![0, 1, 2]).unwrap();
        assert_eq!(t.display_one_based(), "1-2-3-1");
    }
}
