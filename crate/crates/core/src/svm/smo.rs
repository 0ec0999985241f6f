//! SMO-type decomposition for the dual L1-SVM
//!
//! ```text
//! min_a  0.5 a'Qa - e'a   s.t.  l'a = 0,  0 <= a_i <= r(class_i)
//! Q_ij = l_i l_j K(f_i, f_j)
//! ```
//!
//! The first index of each working pair is the maximal KKT violator; the
//! second maximises the second-order decrease of the objective among the
//! violating partners. No shrinking.

use super::cache::KernelCache;
use super::{Dataset, DualModel, SvmModel, TrainConfig, TrainReport};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;
const DEFAULT_MAX_ITER: usize = 10_000_000;

struct State {
    y: Vec<f64>,
    bound: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
}

impl State {
    #[inline]
    fn at_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.bound[t]
    }

    #[inline]
    fn at_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    #[inline]
    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            !self.at_upper(t)
        } else {
            !self.at_lower(t)
        }
    }

    #[inline]
    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            !self.at_lower(t)
        } else {
            !self.at_upper(t)
        }
    }

    /// `max_{I_up} -y G - min_{I_low} -y G`
    fn max_violation(&self) -> f64 {
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::NEG_INFINITY;
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) {
                up = up.max(v);
            }
            if self.in_low(t) {
                low = low.max(-v);
            }
        }
        if up == f64::NEG_INFINITY || low == f64::NEG_INFINITY {
            0.0
        } else {
            up + low
        }
    }
}

pub fn train_dual(data: &Dataset, config: &TrainConfig) -> Result<(SvmModel, TrainReport)> {
    config.validate()?;
    let (n_pos, n_neg) = data.class_counts();
    let (r_pos, r_neg) = data.penalties(config)?;
    let l = data.len();
    let max_iter = config.max_iter.unwrap_or(DEFAULT_MAX_ITER);

    let y: Vec<f64> = data.labels().iter().map(|&v| v as f64).collect();
    let bound: Vec<f64> = y.iter().map(|&v| if v > 0.0 { r_pos } else { r_neg }).collect();
    let mut st = State {
        y,
        bound,
        alpha: vec![0.0; l],
        grad: vec![-1.0; l],
    };
    let mut cache = KernelCache::new(data, config.kernel, config.cache_mb);
    let diag = cache.diagonal();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // first index: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            if st.in_up(t) {
                let v = -st.y[t] * st.grad[t];
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        let ki = cache.row(i);
        let yi = st.y[i];

        // second index: best second-order gain among violating partners
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best_obj = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..l {
            if !st.in_low(t) {
                continue;
            }
            let v = st.y[t] * st.grad[t];
            if v >= gmax2 {
                gmax2 = v;
            }
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                let quad = diag[i] + diag[t] - 2.0 * ki[t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < config.tol || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let kj = cache.row(j);
        let yj = st.y[j];
        let (ci, cj) = (st.bound[i], st.bound[j]);
        let (old_ai, old_aj) = (st.alpha[i], st.alpha[j]);
        let (mut ai, mut aj) = (old_ai, old_aj);
        // Q_ij = y_i y_j K_ij
        let qij = yi * yj * ki[j];
        if yi != yj {
            let quad = diag[i] + diag[j] + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-st.grad[i] - st.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let quad = diag[i] + diag[j] - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (st.grad[i] - st.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        st.alpha[i] = ai;
        st.alpha[j] = aj;
        let (dai, daj) = (ai - old_ai, aj - old_aj);
        // G_t += Q_ti dai + Q_tj daj
        let (si, sj) = (yi * dai, yj * daj);
        for t in 0..l {
            st.grad[t] += st.y[t] * (ki[t] * si + kj[t] * sj);
        }
    }

    // bias from free vectors, else midpoint of the bound-implied interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut free_sum = 0.0;
    for t in 0..l {
        let yg = st.y[t] * st.grad[t];
        if st.at_upper(t) {
            if st.y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if st.at_lower(t) {
            if st.y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    if !rho.is_finite() {
        return Err(Error::Svm("could not determine the bias".into()));
    }

    let objective = 0.5 * (0..l).map(|t| st.alpha[t] * (st.grad[t] - 1.0)).sum::<f64>();
    let residual = st.max_violation();

    let mut support_vectors = Vec::new();
    let mut coeffs = Vec::new();
    for t in 0..l {
        if st.alpha[t] > 0.0 {
            support_vectors.extend_from_slice(data.row(t));
            coeffs.push(st.alpha[t] * st.y[t]);
        }
    }
    let model = SvmModel::Dual(DualModel {
        kernel: config.kernel,
        dim: data.dim(),
        support_vectors,
        coeffs,
        bias: -rho,
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
        alphas: Some(st.alpha),
    };
    Ok((model, report))
}
