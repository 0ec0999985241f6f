#![allow(dead_code)]

use mlpr::{EdgeMask, Instance};

/// Minimum tour cost by enumerating every permutation with city 0 first.
/// Honours the mask and all precedence pairs. `None` if nothing is feasible.
pub fn brute_force(inst: &Instance, mask: Option<&EdgeMask>) -> Option<f64> {
    let n = inst.n();
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best: Option<f64> = None;
    permute(&mut rest, 0, &mut |perm| {
        let mut order = Vec::with_capacity(n);
        order.push(0);
        order.extend_from_slice(perm);
        if !inst.respects_precedence(&order) {
            return;
        }
        let mut cost = 0.0;
        for k in 0..n {
            let (a, b) = (order[k], order[(k + 1) % n]);
            if let Some(m) = mask {
                if !m.allows(inst, a, b) {
                    return;
                }
            }
            cost += inst.cost(a, b);
        }
        if best.is_none_or(|b| cost < b) {
            best = Some(cost);
        }
    });
    best
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Deterministic 64-bit LCG for test fixtures.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 11
    }

    pub fn below(&mut self, k: u64) -> u64 {
        self.next() % k
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 42) as f64
    }
}

/// Random precedence DAG over cities `1..n` (edges follow a hidden order).
pub fn random_dag(rng: &mut Lcg, n: usize, pairs: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (1..n).collect();
    for i in (1..order.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    let mut out = Vec::new();
    let max_pairs = (n - 1) * (n - 2) / 2;
    while out.len() < pairs.min(max_pairs) {
        let a = rng.below(n as u64 - 1) as usize;
        let b = rng.below(n as u64 - 1) as usize;
        if a == b {
            continue;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let p = (order[a], order[b]);
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Random integer cost matrix; symmetric unless `directed`.
pub fn random_matrix(rng: &mut Lcg, n: usize, max: u64, directed: bool) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j || (!directed && j < i) {
                continue;
            }
            let v = (1 + rng.below(max)) as f64;
            c[i * n + j] = v;
            if !directed {
                c[j * n + i] = v;
            }
        }
    }
    c
}
