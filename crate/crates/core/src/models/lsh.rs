//! Approximate k-NN regression over an LSH forest.
//!
//! Each tree hashes a row to `hash_len` bits, bit `b` being the sign of the
//! row's projection (relative to the training mean) on a random Gaussian
//! hyperplane. Rows are kept sorted by hash key, so all rows sharing a key
//! prefix form a contiguous range. A query starts at full prefix length in
//! every tree and shortens the prefix, in all trees together, until the union
//! of matching rows holds at least `candidate_multiplier * k` candidates;
//! those are re-ranked by exact Euclidean distance.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::knn::{mean_label, nearest_among, validate};
use super::Regressor;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::{seeded, standard_normal};

pub const MAX_HASH_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LshParams {
    pub k: usize,
    pub n_trees: usize,
    pub hash_len: usize,
    pub candidate_multiplier: usize,
    pub seed: u64,
}

impl Default for LshParams {
    fn default() -> Self {
        LshParams {
            k: 5,
            n_trees: 10,
            hash_len: 16,
            candidate_multiplier: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tree {
    /// `hash_len x dim`
    planes: Matrix,
    /// Sorted hash keys and the row each belongs to.
    keys: Vec<u64>,
    rows: Vec<u32>,
}

impl Tree {
    fn hash(&self, centered: &[f64]) -> u64 {
        self.planes
            .iter_rows()
            .fold(0u64, |key, plane| (key << 1) | u64::from(dot(plane, centered) >= 0.0))
    }

    /// Index range of rows whose key shares the top `len` bits with `key`.
    fn prefix_range(&self, key: u64, len: usize, hash_len: usize) -> (usize, usize) {
        if len == 0 {
            return (0, self.keys.len());
        }
        let shift = hash_len - len;
        let lo_key = (key >> shift) << shift;
        let hi_key = lo_key | if shift == 0 { 0 } else { u64::MAX >> (64 - shift) };
        let lo = self.keys.partition_point(|&k| k < lo_key);
        let hi = self.keys.partition_point(|&k| k <= hi_key);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LshForest {
    pub params: LshParams,
    x: Matrix,
    y: Vec<f64>,
    center: Vec<f64>,
    trees: Vec<Tree>,
}

pub fn fit_lsh(x: &Matrix, y: &[f64], params: &LshParams) -> Result<LshForest> {
    validate(x, y, params.k)?;
    if params.n_trees == 0 {
        return Err(Error::invalid("n_trees", "must be positive"));
    }
    if params.hash_len > MAX_HASH_LEN {
        return Err(Error::invalid("hash_len", "at most 64 bits"));
    }
    if params.candidate_multiplier == 0 {
        return Err(Error::invalid("candidate_multiplier", "must be positive"));
    }
    let (n, dim) = (x.rows(), x.cols());
    let mut center = vec![0.0; dim];
    for r in x.iter_rows() {
        for (c, v) in center.iter_mut().zip(r) {
            *c += v;
        }
    }
    center.iter_mut().for_each(|c| *c /= n as f64);

    let mut rng = seeded(params.seed);
    let mut buf = vec![0.0; dim];
    let trees = (0..params.n_trees)
        .map(|_| {
            let planes = Matrix::from_vec(
                params.hash_len,
                dim,
                (0..params.hash_len * dim).map(|_| standard_normal(&mut rng)).collect(),
            )
            .expect("sized buffer");
            let mut tree = Tree {
                planes,
                keys: Vec::new(),
                rows: Vec::new(),
            };
            let mut keyed: Vec<(u64, u32)> = x
                .iter_rows()
                .enumerate()
                .map(|(i, r)| {
                    center_into(r, &center, &mut buf);
                    (tree.hash(&buf), i as u32)
                })
                .collect();
            keyed.sort_unstable();
            (tree.keys, tree.rows) = keyed.into_iter().unzip();
            tree
        })
        .collect();
    Ok(LshForest {
        params: *params,
        x: x.clone(),
        y: y.to_vec(),
        center,
        trees,
    })
}

fn center_into(row: &[f64], center: &[f64], out: &mut [f64]) {
    for ((o, v), c) in out.iter_mut().zip(row).zip(center) {
        *o = v - c;
    }
}

impl LshForest {
    /// Rows gathered by synchronous prefix shortening, ascending.
    pub fn candidates(&self, query: &[f64]) -> Vec<usize> {
        let n = self.x.rows();
        let hash_len = self.params.hash_len;
        let target = (self.params.candidate_multiplier * self.params.k).min(n);
        let mut centered = vec![0.0; query.len()];
        center_into(query, &self.center, &mut centered);
        let keys: Vec<u64> = self.trees.iter().map(|t| t.hash(&centered)).collect();

        let mut seen = vec![false; n];
        let mut out = Vec::new();
        // ranges already harvested per tree
        let mut taken: Vec<Option<(usize, usize)>> = vec![None; self.trees.len()];
        for len in (0..=hash_len).rev() {
            for ((tree, &key), prev) in self.trees.iter().zip(&keys).zip(taken.iter_mut()) {
                let (lo, hi) = tree.prefix_range(key, len, hash_len);
                let (plo, phi) = prev.unwrap_or((lo, lo));
                for pos in (lo..plo).chain(phi..hi) {
                    let r = tree.rows[pos] as usize;
                    if !seen[r] {
                        seen[r] = true;
                        out.push(r);
                    }
                }
                *prev = Some((lo, hi));
            }
            if out.len() >= target {
                break;
            }
        }
        out.sort_unstable();
        out
    }

    /// Approximate k nearest rows, nearest first.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        nearest_among(&self.x, self.candidates(query), query, self.params.k)
    }
}

impl Regressor for LshForest {
    fn n_features(&self) -> usize {
        self.x.cols()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        mean_label(&self.y, &self.neighbors(row))
    }
}
