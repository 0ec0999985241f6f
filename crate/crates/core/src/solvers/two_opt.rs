//! First-improvement 2-opt restricted to kept edges.

use crate::instance::{EdgeMask, Instance, Tour};

fn usable(instance: &Instance, mask: Option<&EdgeMask>, i: usize, j: usize) -> bool {
    mask.is_none_or(|m| m.allows(instance, i, j))
}

/// Improves `tour` until no 2-opt move helps. City 0 stays first, moves
/// that would use a removed edge or break a precedence are skipped, and
/// the result never costs more than the input.
pub fn improve_2opt(instance: &Instance, tour: &Tour, mask: Option<&EdgeMask>) -> Tour {
    let n = instance.n();
    let mut order = tour.order.clone();
    if let Some(p) = order.iter().position(|&c| c == 0) {
        order.rotate_left(p);
    }
    let directed = instance.is_directed();
    let constrained = !instance.precedence().is_empty();
    let eps = 1e-9 * (1.0 + tour.cost.abs());

    let mut improved = true;
    while improved {
        improved = false;
        'scan: for i in 0..n - 2 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                // reverse order[i+1..=j]
                let a = order[i];
                let b = order[i + 1];
                let c = order[j];
                let d = order[(j + 1) % n];
                let delta = if directed {
                    let mut old = instance.cost(a, b) + instance.cost(c, d);
                    let mut new = instance.cost(a, c) + instance.cost(b, d);
                    for t in i + 1..j {
                        old += instance.cost(order[t], order[t + 1]);
                        new += instance.cost(order[t + 1], order[t]);
                    }
                    new - old
                } else {
                    instance.cost(a, c) + instance.cost(b, d)
                        - instance.cost(a, b)
                        - instance.cost(c, d)
                };
                if delta >= -eps {
                    continue;
                }
                if !usable(instance, mask, a, c) || !usable(instance, mask, b, d) {
                    continue;
                }
                if directed && mask.is_some()
                    && !(i + 1..j).all(|t| usable(instance, mask, order[t + 1], order[t]))
                {
                    continue;
                }
                order[i + 1..=j].reverse();
                if constrained && !instance.respects_precedence(&order) {
                    order[i + 1..=j].reverse();
                    continue;
                }
                improved = true;
                break 'scan;
            }
        }
    }
    let cost = instance.tour_cost_unchecked(&order);
    if cost <= tour.cost {
        Tour { order, cost }
    } else {
        tour.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ProblemKind;

    #[test]
    fn square_is_uncrossed() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let mut c = vec![0.0; 16];
        for i in 0..4 {
            for j in 0..4 {
                let (dx, dy): (f64, f64) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                c[i * 4 + j] = (dx * dx + dy * dy).sqrt();
            }
        }
        let inst = Instance::new("sq", 4, c, ProblemKind::SymmetricTsp, vec![]).unwrap();
        let crossed = Tour::new(&inst, vec![0, 2, 1, 3]).unwrap();
        let out = improve_2opt(&inst, &crossed, None);
        assert!((out.cost - 4.0).abs() < 1e-12);
        let fixed = improve_2opt(&inst, &out, None);
        assert_eq!(fixed, out);
    }
}
