//! Small dense linear algebra: a row-major matrix, Gram-Schmidt, one-sided
//! Jacobi SVD and a Cholesky solver. Sizes in this crate stay in the low
//! thousands, so nothing here is blocked or vectorized.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally long rows. An empty slice yields a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = out.row_mut(i);
            for (k, &aik) in a.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                axpy(aik, other.row(k), o);
            }
        }
        Ok(out)
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthonormalizes `vectors` in place with two passes of modified
/// Gram-Schmidt. Vectors that collapse numerically are replaced by canonical
/// basis vectors orthogonalized against the ones already accepted, so the
/// result is always an orthonormal set as long as `vectors.len() <= dim`.
pub fn orthonormalize(vectors: &mut [Vec<f64>]) {
    let dim = vectors.first().map_or(0, Vec::len);
    let mut next_basis = 0usize;
    for i in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(i);
        let v = &mut rest[0];
        let scale = norm(v);
        if !project_out(done, v, scale) {
            // degenerate: fall back to the next canonical direction that survives
            loop {
                assert!(next_basis < dim, "more vectors than dimensions");
                v.iter_mut().for_each(|x| *x = 0.0);
                v[next_basis] = 1.0;
                next_basis += 1;
                if project_out(done, v, 1.0) {
                    break;
                }
            }
        }
    }
}

fn project_out(basis: &[Vec<f64>], v: &mut [f64], scale: f64) -> bool {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
    let n = norm(v);
    if !(n > 1e-10 * scale) || n == 0.0 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Thin singular value decomposition `A = U diag(s) Vt`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x r` with orthonormal columns.
    pub u: Matrix,
    /// `r` singular values, non-increasing.
    pub s: Vec<f64>,
    /// `r x cols` with orthonormal rows.
    pub vt: Matrix,
}

/// Thin SVD by one-sided (Hestenes) Jacobi rotations, `r = min(rows, cols)`.
///
/// Singular vectors belonging to zero singular values are completed to an
/// orthonormal set.
pub fn thin_svd(a: &Matrix) -> Svd {
    if a.rows() <= a.cols() {
        let rows: Vec<Vec<f64>> = a.iter_rows().map(<[f64]>::to_vec).collect();
        let (s, left, right) = jacobi_rows(rows);
        Svd {
            u: left,
            s,
            vt: Matrix::from_rows(&right).unwrap_or_else(|_| Matrix::zeros(0, a.cols())),
        }
    } else {
        let t = a.transpose();
        let rows: Vec<Vec<f64>> = t.iter_rows().map(<[f64]>::to_vec).collect();
        let (s, left, right) = jacobi_rows(rows);
        Svd {
            u: Matrix::from_rows(&right)
                .unwrap_or_else(|_| Matrix::zeros(0, a.rows()))
                .transpose(),
            s,
            vt: left.transpose(),
        }
    }
}

/// One-sided Jacobi on a set of `l` row vectors `b_1..b_l` (the rows of a
/// `l x n` matrix `B` with `l <= n`).
///
/// Returns `(s, W, R)` with `B = W diag(s) R`: `W` is `l x l` orthogonal and
/// the rows of `R` are orthonormal right singular vectors, sorted by
/// descending singular value.
fn jacobi_rows(mut rows: Vec<Vec<f64>>) -> (Vec<f64>, Matrix, Vec<Vec<f64>>) {
    const MAX_SWEEPS: usize = 80;
    let l = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    // rotations accumulated as w[i] = combination coefficients of row i
    let mut w = Matrix::identity(l);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..l {
            for q in p + 1..l {
                let alpha = dot(&rows[p], &rows[p]);
                let beta = dot(&rows[q], &rows[q]);
                let gamma = dot(&rows[p], &rows[q]);
                if gamma == 0.0 || libm::fabs(gamma) <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                let (head, tail) = rows.split_at_mut(q);
                let (rp, rq) = (&mut head[p], &mut tail[0]);
                for k in 0..n {
                    let (x, y) = (rp[k], rq[k]);
                    rp[k] = c * x - s * y;
                    rq[k] = s * x + c * y;
                }
                for k in 0..l {
                    let (x, y) = (w[(k, p)], w[(k, q)]);
                    w[(k, p)] = c * x - s * y;
                    w[(k, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = rows.iter().enumerate().map(|(i, r)| (norm(r), i)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let largest = order.first().map_or(0.0, |o| o.0);
    let cutoff = largest * 1e-14 * (n.max(l) as f64);
    let mut s = Vec::with_capacity(l);
    let mut right: Vec<Vec<f64>> = Vec::with_capacity(l);
    let mut left = Matrix::zeros(l, l);
    let mut rank = 0;
    for (j, &(sigma, i)) in order.iter().enumerate() {
        for k in 0..l {
            left[(k, j)] = w[(k, i)];
        }
        if sigma > cutoff && sigma > 0.0 {
            right.push(rows[i].iter().map(|x| x / sigma).collect());
            s.push(sigma);
            rank += 1;
        } else {
            right.push(rows[i].clone());
            s.push(0.0);
        }
    }
    if rank < l {
        // complete the null-space directions
        orthonormalize(&mut right);
    }
    (s, left, right)
}

/// Solves `A x = b` for symmetric positive definite `A` by Cholesky.
/// Returns `None` when a pivot is not strictly positive.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    debug_assert_eq!(a.cols(), n);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = libm::sqrt(d);
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd) -> Matrix {
        let mut us = svd.u.clone();
        for i in 0..us.rows() {
            for j in 0..us.cols() {
                us[(i, j)] *= svd.s[j];
            }
        }
        us.matmul(&svd.vt).unwrap()
    }

    #[test]
    fn svd_reconstructs_wide_and_tall() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 0.0, -1.0], [0.5, -3.0, 2.0, 0.0], [4.0, 1.0, 1.0, 1.0]]).unwrap();
        for m in [a.clone(), a.transpose()] {
            let svd = thin_svd(&m);
            let r = reconstruct(&svd);
            for (x, y) in r.as_slice().iter().zip(m.as_slice()) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn svd_of_diagonal() {
        let a = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        let svd = thin_svd(&a);
        assert_eq!(svd.s, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn svd_rank_deficient_rows_stay_orthonormal() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 0.0]]).unwrap();
        let svd = thin_svd(&a);
        assert!(svd.s[1].abs() < 1e-12 && svd.s[2] == 0.0);
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(svd.vt.row(i), svd.vt.row(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12, "{i},{j}: {d}");
            }
        }
    }

    #[test]
    fn orthonormalize_replaces_collapsed_vectors() {
        let mut v = vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 0.0, 0.0]];
        orthonormalize(&mut v);
        for i in 0..3 {
            assert!((norm(&v[i]) - 1.0).abs() < 1e-12);
            for j in 0..i {
                assert!(dot(&v[i], &v[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let x = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-14 && x[1].abs() < 1e-14);
        let singular = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(cholesky_solve(&singular, &[1.0, 1.0]).is_none());
    }
}
