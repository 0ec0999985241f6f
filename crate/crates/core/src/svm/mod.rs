//! Cost-sensitive support vector machines.
//!
//! Two training paths:
//!
//! * [`train_dual`] solves the L1-SVM dual with class-dependent box
//!   constraints `0 <= alpha_i <= r(class_i)` by SMO-type decomposition
//!   (RBF or linear kernel).
//! * [`train_primal_linear`] minimises the linear L2-SVM primal
//!   `0.5 |w|^2 + sum_i r(class_i) max(0, 1 - l_i (w.f_i + b))^2` with a
//!   trust-region Newton method using Hessian-vector products only.
//!
//! Positive examples (edges on an optimal tour) are rare, so the positive
//! penalty is `r+ = eps_m * n_neg / n_pos` against `r- = 1`.

mod cache;
mod io;
pub mod primal;
mod smo;

pub use io::{load_model, save_model};
pub use primal::train_primal_linear_data;
pub use smo::train_dual;

use crate::error::{Error, Result};
use crate::features::{EdgeFeatureTable, NUM_FEATURES};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    /// RBF with `gamma = 1 / number_of_features`.
    pub fn default_rbf() -> Self {
        Kernel::Rbf {
            gamma: 1.0 / NUM_FEATURES as f64,
        }
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub kernel: Kernel,
    /// Extra weight on misclassified positives (`eps_m`).
    pub eps_m: f64,
    /// Stopping tolerance: maximal KKT violation for SMO, gradient norm
    /// relative to the initial one for Newton.
    pub tol: f64,
    /// Iteration cap; `None` picks 10^7 SMO pair updates or 1000 Newton
    /// iterations.
    pub max_iter: Option<usize>,
    /// Kernel row cache budget in MiB.
    pub cache_mb: usize,
    /// Multiplies both class penalties (1 keeps `r- = 1`).
    pub penalty_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            kernel: Kernel::default_rbf(),
            eps_m: 10.0,
            tol: 1e-3,
            max_iter: None,
            cache_mb: 200,
            penalty_scale: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if let Kernel::Rbf { gamma } = self.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::Svm(format!("gamma must be positive, got {gamma}")));
            }
        }
        if !(self.eps_m > 0.0 && self.eps_m.is_finite()) {
            return Err(Error::Svm(format!("eps_m must be positive, got {}", self.eps_m)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Svm(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.penalty_scale > 0.0 && self.penalty_scale.is_finite()) {
            return Err(Error::Svm("penalty_scale must be positive".into()));
        }
        Ok(())
    }
}

/// `(r+, r-)` with `r- = 1` and `r+ = eps_m * n_neg / n_pos`.
pub fn class_weights(n_pos: usize, n_neg: usize, eps_m: f64) -> Result<(f64, f64)> {
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Svm(format!(
            "both classes required (positives {n_pos}, negatives {n_neg})"
        )));
    }
    Ok((eps_m * n_neg as f64 / n_pos as f64, 1.0))
}

/// Dense labelled training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    rows: Vec<f64>,
    labels: Vec<i8>,
}

impl Dataset {
    pub fn new(dim: usize, rows: Vec<f64>, labels: Vec<i8>) -> Result<Self> {
        if dim == 0 || rows.len() != dim * labels.len() {
            return Err(Error::SizeMismatch {
                expected: dim * labels.len(),
                actual: rows.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::Svm(format!("labels must be +1 or -1, got {bad}")));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Svm("non-finite feature value".into()));
        }
        Ok(Dataset { dim, rows, labels })
    }

    /// Pools labelled feature tables into one dataset.
    pub fn from_tables<'a>(tables: impl IntoIterator<Item = &'a EdgeFeatureTable>) -> Result<Self> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for t in tables {
            let l = t.labels.as_ref().ok_or_else(|| {
                Error::Svm(format!("table `{}` has no labels", t.instance_name))
            })?;
            for f in &t.features {
                rows.extend_from_slice(f);
            }
            labels.extend_from_slice(l);
        }
        Dataset::new(NUM_FEATURES, rows, labels)
    }

    pub fn from_table(table: &EdgeFeatureTable) -> Result<Self> {
        Self::from_tables(std::iter::once(table))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// `(positives, negatives)`
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (pos, self.labels.len() - pos)
    }

    /// Copy without row `i`.
    pub fn without_row(&self, i: usize) -> Self {
        let mut rows = self.rows.clone();
        rows.drain(i * self.dim..(i + 1) * self.dim);
        let mut labels = self.labels.clone();
        labels.remove(i);
        Dataset {
            dim: self.dim,
            rows,
            labels,
        }
    }

    pub(crate) fn penalties(&self, config: &TrainConfig) -> Result<(f64, f64)> {
        let (pos, neg) = self.class_counts();
        let (rp, rn) = class_weights(pos, neg, config.eps_m)?;
        Ok((rp * config.penalty_scale, rn * config.penalty_scale))
    }
}

/// Kernel expansion `sum coeff_i K(sv_i, f) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualModel {
    pub kernel: Kernel,
    pub dim: usize,
    /// Flattened support vectors.
    pub support_vectors: Vec<f64>,
    /// `alpha_i * l_i` per support vector.
    pub coeffs: Vec<f64>,
    pub bias: f64,
    pub class_weights: (f64, f64),
}

impl DualModel {
    pub fn n_support(&self) -> usize {
        self.coeffs.len()
    }

    pub fn support_vector(&self, k: usize) -> &[f64] {
        &self.support_vectors[k * self.dim..(k + 1) * self.dim]
    }
}

/// Hyperplane `w.f + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub class_weights: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SvmModel {
    Dual(DualModel),
    Linear(LinearModel),
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        match self {
            SvmModel::Dual(m) => m.dim,
            SvmModel::Linear(m) => m.weights.len(),
        }
    }

    pub fn bias(&self) -> f64 {
        match self {
            SvmModel::Dual(m) => m.bias,
            SvmModel::Linear(m) => m.bias,
        }
    }

    pub fn class_weights(&self) -> (f64, f64) {
        match self {
            SvmModel::Dual(m) => m.class_weights,
            SvmModel::Linear(m) => m.class_weights,
        }
    }

    pub fn kind_tag(&self) -> &'static str {
        match self {
            SvmModel::Dual(DualModel {
                kernel: Kernel::Rbf { .. },
                ..
            }) => "dual-rbf",
            SvmModel::Dual(_) => "dual-linear",
            SvmModel::Linear(_) => "primal-linear",
        }
    }

    /// Raw decision value; errors on a dimension mismatch.
    pub fn decision_value(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                actual: f.len(),
            });
        }
        Ok(self.decision_unchecked(f))
    }

    fn decision_unchecked(&self, f: &[f64]) -> f64 {
        match self {
            SvmModel::Dual(m) => {
                let mut sum = m.bias;
                for k in 0..m.n_support() {
                    sum += m.coeffs[k] * m.kernel.eval(m.support_vector(k), f);
                }
                sum
            }
            SvmModel::Linear(m) => {
                m.bias + m.weights.iter().zip(f).map(|(w, x)| w * x).sum::<f64>()
            }
        }
    }

    /// Predicted label; a decision value of exactly zero keeps the edge.
    pub fn label(&self, f: &[f64]) -> Result<i8> {
        self.decision_value(f).map(sign_label)
    }

    /// Labels for every row of a feature table.
    pub fn predict(&self, table: &EdgeFeatureTable) -> Result<Vec<i8>> {
        if self.dim() != NUM_FEATURES {
            return Err(Error::SizeMismatch {
                expected: NUM_FEATURES,
                actual: self.dim(),
            });
        }
        Ok(table
            .features
            .par_iter()
            .map(|f| sign_label(self.decision_unchecked(f)))
            .collect())
    }

    pub fn decision_values(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.dim() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                actual: data.dim(),
            });
        }
        Ok((0..data.len())
            .into_par_iter()
            .map(|i| self.decision_unchecked(data.row(i)))
            .collect())
    }
}

#[inline]
pub fn sign_label(value: f64) -> i8 {
    if value >= 0.0 {
        1
    } else {
        -1
    }
}

/// Diagnostics from a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective (SMO) or primal objective (Newton) at the solution.
    pub objective: f64,
    /// Maximal KKT violation (SMO) or final gradient norm (Newton).
    pub residual: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub class_weights: (f64, f64),
    /// Full dual solution, SMO only.
    pub alphas: Option<Vec<f64>>,
}

/// Trains a labelled table: RBF kernels go through the dual solver, the
/// linear kernel through the primal Newton solver.
pub fn train(table: &EdgeFeatureTable, config: &TrainConfig) -> Result<(SvmModel, TrainReport)> {
    train_data(&Dataset::from_table(table)?, config)
}

pub fn train_data(data: &Dataset, config: &TrainConfig) -> Result<(SvmModel, TrainReport)> {
    match config.kernel {
        Kernel::Rbf { .. } => train_dual(data, config),
        Kernel::Linear => train_primal_linear_data(data, config),
    }
}

/// Dual L1-SVM with the RBF kernel on a labelled table.
pub fn train_dual_rbf(table: &EdgeFeatureTable, config: &TrainConfig) -> Result<(SvmModel, TrainReport)> {
    if !matches!(config.kernel, Kernel::Rbf { .. }) {
        return Err(Error::Svm("train_dual_rbf needs an RBF kernel".into()));
    }
    train_dual(&Dataset::from_table(table)?, config)
}

/// Primal linear L2-SVM on a labelled table.
pub fn train_primal_linear(table: &EdgeFeatureTable, config: &TrainConfig) -> Result<(SvmModel, TrainReport)> {
    train_primal_linear_data(&Dataset::from_table(table)?, config)
}
