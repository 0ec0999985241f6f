//! Subset dynamic programming over tours from city 0.

use super::{SolveOptions, SolveReport};
use crate::error::{Error, Result};
use crate::instance::{EdgeMask, Instance, ProblemKind, Tour};
use std::time::Instant;

/// Exact minimum tour by Held-Karp DP. Precedence pairs, if any, are
/// honoured, so the result is always feasible for the instance.
pub fn solve_held_karp(
    instance: &Instance,
    mask: Option<&EdgeMask>,
    options: &SolveOptions,
) -> Result<SolveReport> {
    subset_dp(instance, mask, options)
}

/// Exact SOP optimum: only precedence-closed subsets are expanded.
pub fn solve_sop_exact(
    instance: &Instance,
    mask: Option<&EdgeMask>,
    options: &SolveOptions,
) -> Result<SolveReport> {
    if instance.kind() != ProblemKind::Sop {
        return Err(Error::InvalidArgument(
            "solve_sop_exact needs an SOP instance".into(),
        ));
    }
    subset_dp(instance, mask, options)
}

fn subset_dp(
    instance: &Instance,
    mask: Option<&EdgeMask>,
    options: &SolveOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    let n = instance.n();
    if n > options.dp_cap {
        return Err(Error::Solver(format!(
            "n = {n} exceeds the DP cap of {}",
            options.dp_cap
        )));
    }
    if let Some(m) = mask {
        m.check(instance)?;
    }
    // cities 1..n map to bits 0..n-1
    let k = n - 1;
    let full = (1usize << k) - 1;
    let mut need = vec![0usize; n];
    for &(a, b) in instance.precedence() {
        if a != 0 {
            need[b] |= 1 << (a - 1);
        }
    }
    let w = |i: usize, j: usize| -> f64 {
        match mask {
            Some(m) if !m.allows(instance, i, j) => f64::INFINITY,
            _ => instance.cost(i, j),
        }
    };

    let mut dp = vec![f64::INFINITY; (full + 1) * k];
    for j in 1..n {
        if need[j] == 0 {
            dp[(1 << (j - 1)) * k + (j - 1)] = w(0, j);
        }
    }
    let mut nodes = 0u64;
    for s in 1..=full {
        for last in 0..k {
            if s & (1 << last) == 0 {
                continue;
            }
            let here = dp[s * k + last];
            if !here.is_finite() {
                continue;
            }
            nodes += 1;
            let mut rest = full & !s;
            while rest != 0 {
                let nb = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if need[nb + 1] & !s != 0 {
                    continue;
                }
                let cand = here + w(last + 1, nb + 1);
                let slot = &mut dp[(s | (1 << nb)) * k + nb];
                if cand < *slot {
                    *slot = cand;
                }
            }
        }
    }

    let mut best = f64::INFINITY;
    let mut last = usize::MAX;
    for j in 0..k {
        let v = dp[full * k + j] + w(j + 1, 0);
        if v < best {
            best = v;
            last = j;
        }
    }
    if !best.is_finite() {
        return Err(Error::Infeasible("no tour uses only kept edges".into()));
    }

    // walk back through the table
    let mut order = Vec::with_capacity(n);
    let mut s = full;
    let mut cur = last;
    loop {
        order.push(cur + 1);
        let here = dp[s * k + cur];
        let prev_s = s & !(1 << cur);
        if prev_s == 0 {
            break;
        }
        let mut found = usize::MAX;
        let mut rest = prev_s;
        while rest != 0 {
            let p = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let v = dp[prev_s * k + p] + w(p + 1, cur + 1);
            if v == here {
                found = p;
                break;
            }
        }
        debug_assert!(found != usize::MAX);
        s = prev_s;
        cur = found;
    }
    order.push(0);
    order.reverse();
    let tour = Tour::new(instance, order)?;
    Ok(SolveReport {
        tour,
        optimal: true,
        nodes_expanded: nodes,
        wall_time: start.elapsed(),
    })
}
