//! Supervised pair datasets: graph traversal, pair-difference rows, the
//! train/test split and train-only standardization.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cooccur::SimilarityGraph;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::Matrix;
use crate::rng::{permutation, seeded};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const STD_FLOOR: f64 = 1e-12;

/// Walks the graph breadth-first and emits each undirected edge once as
/// `(smaller id, larger id, similarity)` until `limit` edges are collected.
///
/// The walk starts at the highest-degree node (lowest id on ties); unvisited
/// components are then entered in ascending node id. Neighbors are expanded
/// in ascending id.
pub fn select_pairs(g: &SimilarityGraph, limit: usize) -> Result<Vec<(u32, u32, f64)>> {
    if g.is_empty() {
        return Err(Error::Empty("similarity graph"));
    }
    if limit == 0 {
        return Err(Error::invalid("limit", "must be positive"));
    }
    let start = g
        .nodes()
        .fold(None::<(u32, usize)>, |best, n| {
            let d = g.degree(n);
            match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((n, d)),
            }
        })
        .map(|(n, _)| n)
        .expect("non-empty graph");

    let mut visited: BTreeSet<u32> = BTreeSet::new();
    let mut expanded: BTreeSet<u32> = BTreeSet::new();
    let mut out = Vec::with_capacity(limit.min(g.edge_count()));
    let roots = core::iter::once(start).chain(g.nodes());
    for root in roots {
        if !visited.insert(root) {
            continue;
        }
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            expanded.insert(u);
            for &(v, s) in g.neighbors(u) {
                // an edge belongs to whichever endpoint is expanded first
                if !expanded.contains(&v) {
                    if out.len() == limit {
                        return Ok(out);
                    }
                    out.push((u.min(v), u.max(v), s));
                }
                if visited.insert(v) {
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(out)
}

/// Row partition of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Ascending row indices.
    pub train: Vec<usize>,
    /// Ascending row indices.
    pub test: Vec<usize>,
}

/// Per-column standardization parameters fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    /// Population standard deviation, floored at [`STD_FLOOR`].
    pub std: Vec<f64>,
}

impl ScalerParams {
    /// Column means and population standard deviations of `rows`.
    pub fn fit(rows: &Matrix) -> Result<Self> {
        if rows.rows() < 2 {
            return Err(Error::invalid("rows", "at least 2 training rows are required"));
        }
        let n = rows.rows() as f64;
        let m = rows.cols();
        let mut mean = alloc::vec![0.0; m];
        for r in rows.iter_rows() {
            for (acc, x) in mean.iter_mut().zip(r) {
                *acc += x;
            }
        }
        mean.iter_mut().for_each(|x| *x /= n);
        let mut var = alloc::vec![0.0; m];
        for r in rows.iter_rows() {
            for ((acc, x), mu) in var.iter_mut().zip(r).zip(&mean) {
                let d = x - mu;
                *acc += d * d;
            }
        }
        let std = var.into_iter().map(|v| libm::sqrt(v / n).max(STD_FLOOR)).collect();
        Ok(ScalerParams { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(x - mean) / std` column-wise. Applying twice is not the identity:
    /// fit once on train rows, apply once to each partition.
    pub fn apply(&self, rows: &Matrix) -> Result<Matrix> {
        if rows.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: rows.cols(),
            });
        }
        let mut out = rows.clone();
        for i in 0..out.rows() {
            for ((x, mu), sd) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *x = (*x - mu) / sd;
            }
        }
        Ok(out)
    }
}

/// Pair-difference design matrix with similarity labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub pairs: Vec<(u32, u32)>,
    pub split: Option<Split>,
    pub scaler: Option<ScalerParams>,
}

/// Row `f_a - f_b` and label `similarity` for every pair `(a, b, similarity)`.
///
/// With `both_orientations`, each pair also contributes `(b, a)` right after
/// it (negated row, same label).
pub fn build_pair_matrix(pairs: &[(u32, u32, f64)], features: &FeatureMatrix, both_orientations: bool) -> Result<PairDataset> {
    let m = features.dim();
    let per = if both_orientations { 2 } else { 1 };
    let mut data = Vec::with_capacity(pairs.len() * m * per);
    let mut y = Vec::with_capacity(pairs.len() * per);
    let mut index = Vec::with_capacity(pairs.len() * per);
    for &(a, b, s) in pairs {
        let fa = features.get(a).ok_or(Error::UnknownSong(a))?;
        let fb = features.get(b).ok_or(Error::UnknownSong(b))?;
        data.extend(fa.iter().zip(fb).map(|(p, q)| p - q));
        y.push(s);
        index.push((a, b));
        if both_orientations {
            data.extend(fb.iter().zip(fa).map(|(p, q)| p - q));
            y.push(s);
            index.push((b, a));
        }
    }
    Ok(PairDataset {
        x: Matrix::from_vec(y.len(), m, data)?,
        y,
        pairs: index,
        split: None,
        scaler: None,
    })
}

impl PairDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Seeded uniform partition with `round(n * test_fraction)` test rows.
    pub fn split(mut self, test_fraction: f64, seed: u64) -> Result<Self> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::invalid("test_fraction", "must lie in (0, 1)"));
        }
        let n = self.len();
        let n_test = libm::round(n as f64 * test_fraction) as usize;
        let perm = permutation(n, &mut seeded(seed));
        let mut test: Vec<usize> = perm[..n_test].to_vec();
        let mut train: Vec<usize> = perm[n_test..].to_vec();
        test.sort_unstable();
        train.sort_unstable();
        self.split = Some(Split { train, test });
        self.scaler = None;
        Ok(self)
    }

    pub fn train(&self) -> Option<(Matrix, Vec<f64>)> {
        self.split.as_ref().map(|s| self.subset(&s.train))
    }

    pub fn test(&self) -> Option<(Matrix, Vec<f64>)> {
        self.split.as_ref().map(|s| self.subset(&s.test))
    }

    fn subset(&self, idx: &[usize]) -> (Matrix, Vec<f64>) {
        (self.x.select_rows(idx), idx.iter().map(|&i| self.y[i]).collect())
    }

    /// Fits the scaler on the training rows only.
    pub fn fit_scaler(&self) -> Result<ScalerParams> {
        let (x, _) = self.train().ok_or(Error::invalid("split", "dataset has not been split"))?;
        ScalerParams::fit(&x)
    }
}
