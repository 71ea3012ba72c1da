use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Regressor;
use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};

/// Exact k-nearest-neighbor mean regression by linear scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<f64>,
}

pub fn fit_knn(x: &Matrix, y: &[f64], k: usize) -> Result<KnnModel> {
    validate(x, y, k)?;
    Ok(KnnModel {
        k,
        x: x.clone(),
        y: y.to_vec(),
    })
}

pub(super) fn validate(x: &Matrix, y: &[f64], k: usize) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::LengthMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if k == 0 || k > x.rows() {
        return Err(Error::invalid("k", alloc::format!("must lie in 1..={}", x.rows())));
    }
    Ok(())
}

impl KnnModel {
    /// Row indices of the `k` nearest stored rows, nearest first. Equal
    /// distances go to the lower row index.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        nearest_among(&self.x, 0..self.x.rows(), query, self.k)
    }
}

impl Regressor for KnnModel {
    fn n_features(&self) -> usize {
        self.x.cols()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        mean_label(&self.y, &self.neighbors(row))
    }
}

/// The `k` candidates closest to `query` in Euclidean distance, ordered by
/// `(distance, index)`.
pub(crate) fn nearest_among<I: IntoIterator<Item = usize>>(x: &Matrix, candidates: I, query: &[f64], k: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = candidates
        .into_iter()
        .map(|i| (squared_distance(x.row(i), query), i))
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, by_dist);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_dist);
    scored.into_iter().map(|(_, i)| i).collect()
}

/// Arithmetic mean of the selected labels, clamped to their range so rounding
/// never leaves the span of the training labels.
pub(crate) fn mean_label(y: &[f64], idx: &[usize]) -> f64 {
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &i in idx {
        lo = lo.min(y[i]);
        hi = hi.max(y[i]);
        sum += y[i];
    }
    (sum / idx.len() as f64).clamp(lo, hi)
}
