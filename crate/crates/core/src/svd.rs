//! Truncated SVD by randomized subspace iteration.
//!
//! A Gaussian test block of `k + oversample` vectors is pushed through the
//! matrix, then refined by alternating products with `A^T` and `A`
//! (re-orthonormalizing each time). After the minimum number of power
//! iterations the Ritz values of the projected matrix are checked after every
//! further iteration and the loop stops once they no longer move.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureScheme};
use crate::linalg::{axpy, dot, orthonormalize, thin_svd, Matrix};
use crate::rng::{seeded, standard_normal};
use crate::tfidf::SparseDocMatrix;

/// Matrix-vector products needed by the randomized solver.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `out = A x`
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// `out = A^T y`
    fn apply_transpose(&self, y: &[f64], out: &mut [f64]);
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            axpy(yi, self.row(i), out);
        }
    }
}

impl LinearOperator for SparseDocMatrix {
    fn nrows(&self) -> usize {
        self.n_docs()
    }

    fn ncols(&self) -> usize {
        self.n_terms()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *o = c.iter().zip(v).map(|(&t, &w)| w * x[t as usize]).sum();
        }
    }

    fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            let (c, v) = self.row(i);
            for (&t, &w) in c.iter().zip(v) {
                out[t as usize] += w * yi;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdParams {
    pub oversample: usize,
    /// Power iterations always performed.
    pub power_iters: usize,
    /// Hard cap on power iterations.
    pub max_iters: usize,
    /// Stop once every retained Ritz value moves less than `tol * sigma_1`
    /// between two iterations.
    pub tol: f64,
}

impl Default for SvdParams {
    fn default() -> Self {
        SvdParams {
            oversample: 10,
            power_iters: 2,
            max_iters: 300,
            tol: 1e-14,
        }
    }
}

/// Top right singular vectors and values of a document-term matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdModel {
    /// `k x n_terms`, orthonormal rows.
    pub components: Matrix,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    pub seed: u64,
}

impl SvdModel {
    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn n_terms(&self) -> usize {
        self.components.cols()
    }
}

pub fn fit_truncated_svd<A: LinearOperator>(a: &A, k: usize, seed: u64) -> Result<SvdModel> {
    fit_truncated_svd_with(a, k, seed, &SvdParams::default())
}

pub fn fit_truncated_svd_with<A: LinearOperator>(a: &A, k: usize, seed: u64, params: &SvdParams) -> Result<SvdModel> {
    let (m, n) = (a.nrows(), a.ncols());
    if k == 0 || k > m.min(n) {
        return Err(Error::invalid("k", alloc::format!("must lie in 1..={}", m.min(n))));
    }
    let l = (k + params.oversample).min(m).min(n);
    let mut rng = seeded(seed);

    let omega: Vec<Vec<f64>> = (0..l).map(|_| (0..n).map(|_| standard_normal(&mut rng)).collect()).collect();
    let mut q = apply_block(a, &omega, m, false);
    orthonormalize(&mut q);

    let mut prev: Option<Vec<f64>> = None;
    let mut iter = 0;
    let (s, right) = loop {
        let exact = l == m.min(n);
        if iter >= params.power_iters || exact {
            let (s, right) = project_and_decompose(a, &q, n);
            let settled = exact
                || iter >= params.max_iters
                || prev.as_ref().is_some_and(|p| {
                    let scale = s[0].max(f64::MIN_POSITIVE);
                    p.iter().zip(&s).take(k).all(|(a, b)| libm::fabs(a - b) <= params.tol * scale)
                });
            if settled {
                break (s, right);
            }
            prev = Some(s);
        }
        let mut z = apply_block(a, &q, n, true);
        orthonormalize(&mut z);
        q = apply_block(a, &z, m, false);
        orthonormalize(&mut q);
        iter += 1;
    };

    let mut components = Matrix::zeros(k, n);
    for (j, v) in right.iter().take(k).enumerate() {
        // sign convention: the largest-magnitude entry is positive
        let pivot = v.iter().copied().fold(0.0f64, |acc, x| if libm::fabs(x) > libm::fabs(acc) { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (c, &x) in components.row_mut(j).iter_mut().zip(v) {
            *c = sign * x;
        }
    }
    Ok(SvdModel {
        components,
        singular_values: s[..k].to_vec(),
        seed,
    })
}

fn apply_block<A: LinearOperator>(a: &A, block: &[Vec<f64>], out_len: usize, transpose: bool) -> Vec<Vec<f64>> {
    block
        .iter()
        .map(|v| {
            let mut out = vec![0.0; out_len];
            if transpose {
                a.apply_transpose(v, &mut out);
            } else {
                a.apply(v, &mut out);
            }
            out
        })
        .collect()
}

/// SVD of `B = Q^T A`; returns its singular values and right singular vectors.
fn project_and_decompose<A: LinearOperator>(a: &A, q: &[Vec<f64>], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let rows = apply_block(a, q, n, true);
    let b = Matrix::from_rows(&rows).expect("equal-length rows");
    let svd = thin_svd(&b);
    let right = svd.vt.iter_rows().map(<[f64]>::to_vec).collect();
    (svd.s, right)
}

/// Projects every document row onto the SVD components: `X · components^T`.
pub fn project(m: &SparseDocMatrix, svd: &SvdModel) -> Result<Matrix> {
    if m.n_terms() != svd.n_terms() {
        return Err(Error::DimensionMismatch {
            expected: svd.n_terms(),
            actual: m.n_terms(),
        });
    }
    let k = svd.k();
    let mut out = Matrix::zeros(m.n_docs(), k);
    for i in 0..m.n_docs() {
        let (cols, vals) = m.row(i);
        let row = out.row_mut(i);
        for (j, r) in row.iter_mut().enumerate() {
            let comp = svd.components.row(j);
            *r = cols.iter().zip(vals).map(|(&t, &w)| w * comp[t as usize]).sum();
        }
    }
    Ok(out)
}

/// [`project`] labelled with the documents' song ids.
pub fn project_features(m: &SparseDocMatrix, svd: &SvdModel, song_ids: Vec<u32>) -> Result<FeatureMatrix> {
    FeatureMatrix::new(FeatureScheme::Tfidf, song_ids, project(m, svd)?)
}
