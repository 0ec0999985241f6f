//! Trust-region Newton method for the linear L2-SVM primal.
//!
//! Variables are `v = (w, b)`; the bias is not regularised. Only gradients
//! and Hessian-vector products over the currently active rows
//! (`l_i (w.f_i + b) < 1`) are formed, so memory stays linear in the number
//! of rows.

use super::{Dataset, LinearModel, SvmModel, TrainConfig, TrainReport};
use crate::error::Result;
use rayon::prelude::*;

const DEFAULT_MAX_ITER: usize = 1000;
const ROW_BLOCK: usize = 4096;

/// The primal problem bound to a dataset and per-row penalties.
pub struct PrimalProblem<'a> {
    data: &'a Dataset,
    penalty: Vec<f64>,
}

impl<'a> PrimalProblem<'a> {
    pub fn new(data: &'a Dataset, r_pos: f64, r_neg: f64) -> Self {
        let penalty = data
            .labels()
            .iter()
            .map(|&l| if l > 0 { r_pos } else { r_neg })
            .collect();
        PrimalProblem { data, penalty }
    }

    /// Number of variables (`dim + 1`, bias last).
    pub fn size(&self) -> usize {
        self.data.dim() + 1
    }

    #[inline]
    fn margin(&self, v: &[f64], i: usize) -> f64 {
        let d = self.data.dim();
        let z = v[d] + self.data.row(i).iter().zip(&v[..d]).map(|(x, w)| x * w).sum::<f64>();
        z
    }

    /// Sum over row blocks in a fixed order.
    fn blocked<T, F>(&self, init: T, per_row: F, add: impl Fn(&mut T, T)) -> T
    where
        T: Send + Clone + Sync,
        F: Fn(&mut T, usize) + Sync,
    {
        let l = self.data.len();
        let partials: Vec<T> = (0..l.div_ceil(ROW_BLOCK))
            .into_par_iter()
            .map(|b| {
                let mut acc = init.clone();
                for i in b * ROW_BLOCK..((b + 1) * ROW_BLOCK).min(l) {
                    per_row(&mut acc, i);
                }
                acc
            })
            .collect();
        let mut total = init;
        for p in partials {
            add(&mut total, p);
        }
        total
    }

    pub fn objective(&self, v: &[f64]) -> f64 {
        let d = self.data.dim();
        let reg = 0.5 * v[..d].iter().map(|w| w * w).sum::<f64>();
        let loss = self.blocked(
            0.0,
            |acc, i| {
                let l = self.data.labels()[i] as f64;
                let slack = 1.0 - l * self.margin(v, i);
                if slack > 0.0 {
                    *acc += self.penalty[i] * slack * slack;
                }
            },
            |a, b| *a += b,
        );
        reg + loss
    }

    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let d = self.data.dim();
        let mut g = self.blocked(
            vec![0.0; d + 1],
            |acc, i| {
                let l = self.data.labels()[i] as f64;
                let z = self.margin(v, i);
                if 1.0 - l * z > 0.0 {
                    let coef = 2.0 * self.penalty[i] * (z - l);
                    for (a, x) in acc[..d].iter_mut().zip(self.data.row(i)) {
                        *a += coef * x;
                    }
                    acc[d] += coef;
                }
            },
            |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
        );
        for k in 0..d {
            g[k] += v[k];
        }
        g
    }

    fn active_set(&self, v: &[f64]) -> Vec<usize> {
        (0..self.data.len())
            .filter(|&i| 1.0 - self.data.labels()[i] as f64 * self.margin(v, i) > 0.0)
            .collect()
    }

    /// Generalised Hessian-vector product at the point whose active rows are
    /// `active`.
    fn hess_vec(&self, active: &[usize], s: &[f64]) -> Vec<f64> {
        let d = self.data.dim();
        let partials: Vec<Vec<f64>> = active
            .par_chunks(ROW_BLOCK)
            .map(|chunk| {
                let mut acc = vec![0.0; d + 1];
                for &i in chunk {
                    let x = self.data.row(i);
                    let xs = s[d] + x.iter().zip(&s[..d]).map(|(a, b)| a * b).sum::<f64>();
                    let coef = 2.0 * self.penalty[i] * xs;
                    for (a, xv) in acc[..d].iter_mut().zip(x) {
                        *a += coef * xv;
                    }
                    acc[d] += coef;
                }
                acc
            })
            .collect();
        let mut hs = vec![0.0; d + 1];
        for p in partials {
            hs.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
        for k in 0..d {
            hs[k] += s[k];
        }
        hs
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Steihaug conjugate gradient on the trust-region subproblem. Returns the
/// step and the final residual `-g - H s`.
fn truncated_cg(
    problem: &PrimalProblem<'_>,
    active: &[usize],
    g: &[f64],
    radius: f64,
) -> (Vec<f64>, Vec<f64>) {
    let size = g.len();
    let mut s = vec![0.0; size];
    let mut r: Vec<f64> = g.iter().map(|x| -x).collect();
    let mut d = r.clone();
    let cg_tol = 0.1 * norm(g);
    let mut r_tr = dot(&r, &r);
    for _ in 0..(10 * size).max(50) {
        if r_tr.sqrt() <= cg_tol {
            break;
        }
        let hd = problem.hess_vec(active, &d);
        let d_hd = dot(&d, &hd);
        let alpha = if d_hd > 0.0 { r_tr / d_hd } else { f64::INFINITY };
        let trial: Vec<f64> = s.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
        if !alpha.is_finite() || norm(&trial) > radius {
            // step to the trust-region boundary along d
            let std = dot(&s, &d);
            let sts = dot(&s, &s);
            let dtd = dot(&d, &d);
            let dsq = radius * radius;
            let rad = (std * std + dtd * (dsq - sts)).max(0.0).sqrt();
            let tau = if std >= 0.0 {
                (dsq - sts) / (std + rad)
            } else {
                (rad - std) / dtd
            };
            for k in 0..size {
                s[k] += tau * d[k];
                r[k] -= tau * hd[k];
            }
            break;
        }
        s = trial;
        for k in 0..size {
            r[k] -= alpha * hd[k];
        }
        let r_new = dot(&r, &r);
        let beta = r_new / r_tr;
        for k in 0..size {
            d[k] = r[k] + beta * d[k];
        }
        r_tr = r_new;
    }
    (s, r)
}

/// Minimises the primal; returns the solution vector `(w, b)`, the number of
/// accepted iterations and whether the gradient criterion was met.
pub fn minimize(problem: &PrimalProblem<'_>, tol: f64, max_iter: usize) -> (Vec<f64>, usize, bool) {
    const ETA0: f64 = 1e-4;
    const ETA1: f64 = 0.25;
    const ETA2: f64 = 0.75;
    const SIGMA1: f64 = 0.25;
    const SIGMA2: f64 = 0.5;
    const SIGMA3: f64 = 4.0;

    let mut v = vec![0.0; problem.size()];
    let mut f = problem.objective(&v);
    let mut g = problem.gradient(&v);
    let gnorm0 = norm(&g);
    let mut radius = gnorm0;
    let mut active = problem.active_set(&v);
    if gnorm0 == 0.0 {
        return (v, 0, true);
    }
    let mut iter = 0;
    let mut converged = false;
    let mut attempts = 0;
    while iter < max_iter && attempts < 10 * max_iter {
        attempts += 1;
        let (s, r) = truncated_cg(problem, &active, &g, radius);
        let v_new: Vec<f64> = v.iter().zip(&s).map(|(a, b)| a + b).collect();
        let gs = dot(&g, &s);
        let prered = -0.5 * (gs - dot(&s, &r));
        let f_new = problem.objective(&v_new);
        let actred = f - f_new;
        let snorm = norm(&s);
        if iter == 0 {
            radius = radius.min(snorm);
        }
        let alpha = if f_new - f - gs <= 0.0 {
            SIGMA3
        } else {
            SIGMA1.max(-0.5 * (gs / (f_new - f - gs)))
        };
        if actred < ETA0 * prered {
            radius = (alpha.max(SIGMA1) * snorm).min(SIGMA2 * radius);
        } else if actred < ETA1 * prered {
            radius = (SIGMA1 * radius).max((alpha * snorm).min(SIGMA2 * radius));
        } else if actred < ETA2 * prered {
            radius = (SIGMA1 * radius).max((alpha * snorm).min(SIGMA3 * radius));
        } else {
            radius = radius.max((alpha * snorm).min(SIGMA3 * radius));
        }
        if actred > ETA0 * prered {
            iter += 1;
            v = v_new;
            f = f_new;
            g = problem.gradient(&v);
            active = problem.active_set(&v);
            if norm(&g) <= tol * gnorm0 {
                converged = true;
                break;
            }
        }
        if actred.abs() <= 0.0 && prered <= 0.0 {
            break;
        }
        if actred.abs() <= 1e-12 * f.abs() && prered.abs() <= 1e-12 * f.abs() {
            break;
        }
        if radius <= 1e-300 {
            break;
        }
    }
    if !converged {
        converged = norm(&g) <= tol * gnorm0;
    }
    (v, iter, converged)
}

pub fn train_primal_linear_data(data: &Dataset, config: &TrainConfig) -> Result<(SvmModel, TrainReport)> {
    config.validate()?;
    let (n_pos, n_neg) = data.class_counts();
    let (r_pos, r_neg) = data.penalties(config)?;
    let problem = PrimalProblem::new(data, r_pos, r_neg);
    let (v, iterations, converged) = minimize(
        &problem,
        config.tol,
        config.max_iter.unwrap_or(DEFAULT_MAX_ITER),
    );
    let d = data.dim();
    let objective = problem.objective(&v);
    let residual = norm(&problem.gradient(&v));
    let model = SvmModel::Linear(LinearModel {
        weights: v[..d].to_vec(),
        bias: v[d],
        class_weights: (r_pos, r_neg),
    });
    let report = TrainReport {
        iterations,
        converged,
        objective,
        residual,
        n_pos,
        n_neg,
        class_weights: (r_pos, r_neg),
        alphas: None,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::Kernel;

    #[test]
    fn perpendicular_bisector() {
        let data = Dataset::new(2, vec![0.0, 0.0, 2.0, 2.0], vec![-1, 1]).unwrap();
        let cfg = TrainConfig {
            kernel: Kernel::Linear,
            eps_m: 1.0,
            tol: 1e-10,
            penalty_scale: 1e6,
            ..TrainConfig::default()
        };
        let (model, report) = train_primal_linear_data(&data, &cfg).unwrap();
        assert!(report.converged);
        let SvmModel::Linear(lin) = &model else { panic!() };
        assert!((lin.weights[0] - 0.5).abs() < 1e-5);
        assert!((lin.weights[1] - 0.5).abs() < 1e-5);
        assert!((lin.bias + 1.0).abs() < 1e-5);
    }

    #[test]
    fn hessian_matches_gradient_difference() {
        let rows: Vec<f64> = (0..30).map(|k| ((k * 7 % 11) as f64) / 5.0 - 1.0).collect();
        let labels = (0..10).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let data = Dataset::new(3, rows, labels).unwrap();
        let p = PrimalProblem::new(&data, 3.0, 1.0);
        let v = vec![0.1, -0.2, 0.3, 0.05];
        let s = vec![1e-7, -2e-7, 0.5e-7, 1e-7];
        let active = p.active_set(&v);
        let hs = p.hess_vec(&active, &s);
        let g0 = p.gradient(&v);
        let v1: Vec<f64> = v.iter().zip(&s).map(|(a, b)| a + b).collect();
        let g1 = p.gradient(&v1);
        for k in 0..4 {
            assert!(((g1[k] - g0[k]) - hs[k]).abs() < 1e-12, "k={k}");
        }
    }
}
