//! Least-recently-used cache of kernel matrix rows.

use super::{Dataset, Kernel};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

pub(crate) struct KernelCache<'a> {
    data: &'a Dataset,
    kernel: Kernel,
    rows: Vec<Option<(Arc<Vec<f64>>, u64)>>,
    by_age: BTreeMap<u64, usize>,
    clock: u64,
    capacity: usize,
    pub(crate) misses: u64,
}

impl<'a> KernelCache<'a> {
    pub(crate) fn new(data: &'a Dataset, kernel: Kernel, budget_mb: usize) -> Self {
        let row_bytes = (data.len() * std::mem::size_of::<f64>()).max(1);
        let capacity = ((budget_mb << 20) / row_bytes).max(2);
        KernelCache {
            data,
            kernel,
            rows: vec![None; data.len()],
            by_age: BTreeMap::new(),
            clock: 0,
            capacity,
            misses: 0,
        }
    }

    pub(crate) fn diagonal(&self) -> Vec<f64> {
        (0..self.data.len())
            .map(|i| self.kernel.eval(self.data.row(i), self.data.row(i)))
            .collect()
    }

    /// Row `i` of the kernel matrix `K(x_i, x_t)` for all `t`.
    pub(crate) fn row(&mut self, i: usize) -> Arc<Vec<f64>> {
        self.clock += 1;
        let now = self.clock;
        if let Some((row, age)) = self.rows[i].as_mut() {
            self.by_age.remove(age);
            *age = now;
            self.by_age.insert(now, i);
            return Arc::clone(row);
        }
        self.misses += 1;
        if self.by_age.len() >= self.capacity {
            if let Some((_, victim)) = self.by_age.pop_first() {
                self.rows[victim] = None;
            }
        }
        let xi = self.data.row(i);
        let data = self.data;
        let kernel = self.kernel;
        let computed: Vec<f64> = (0..data.len())
            .into_par_iter()
            .with_min_len(1024)
            .map(|t| kernel.eval(xi, data.row(t)))
            .collect();
        let row = Arc::new(computed);
        self.rows[i] = Some((Arc::clone(&row), now));
        self.by_age.insert(now, i);
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eviction_keeps_results_identical() {
        let rows: Vec<f64> = (0..40).map(|v| (v as f64 * 0.37).sin()).collect();
        let data = Dataset::new(2, rows, (0..20).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()).unwrap();
        let kernel = Kernel::Rbf { gamma: 0.5 };
        let mut big = KernelCache::new(&data, kernel, 64);
        let mut tiny = KernelCache::new(&data, kernel, 0);
        assert_eq!(tiny.capacity, 2);
        for i in [0, 5, 3, 0, 19, 5, 7, 0] {
            assert_eq!(*big.row(i), *tiny.row(i));
        }
        assert!(tiny.misses > big.misses);
        assert!(tiny.by_age.len() <= 2);
    }
}
