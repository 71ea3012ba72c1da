//! Epsilon-insensitive support vector regression trained by SMO.
//!
//! The dual is written over `2n` variables `(α, α*)` with signs `+1` / `-1`:
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t.  Σ s_t a_t = 0,  0 ≤ a_t ≤ C
//! Q_tu = s_t s_u K(x_t, x_u),  p = (ε - y, ε + y)
//! ```
//!
//! Working pairs are chosen with second-order information (maximal violating
//! `i`, then the `j` with the largest guaranteed decrease) and updated
//! analytically. Iteration stops when the maximal KKT violation drops below
//! the tolerance.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Regressor;
use crate::error::{Error, Result};
use crate::linalg::{dot, squared_distance, Matrix};
use crate::rng::{permutation, seeded};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => libm::exp(-gamma * squared_distance(a, b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrParams {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Iteration cap; `None` means `max(10_000, 100 n)`.
    pub max_iter: Option<usize>,
    /// Seeds the scan order used to break ties in working-set selection.
    pub seed: u64,
    /// Kernel row cache budget in bytes.
    pub cache_bytes: usize,
}

impl SvrParams {
    pub fn new(kernel: Kernel, c: f64) -> Self {
        SvrParams {
            kernel,
            c,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("C", "must be positive"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", "must be non-negative"));
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(Error::invalid("gamma", "must be positive"));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        Ok(())
    }
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            kernel: Kernel::Linear,
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_iter: None,
            seed: 0,
            cache_bytes: 256 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    pub support_vectors: Matrix,
    /// `α_i - α*_i` of each support vector, within `[-C, C]`.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Dual objective value at termination.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Regressor for SvrModel {
    fn n_features(&self) -> usize {
        self.support_vectors.cols()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        let k = self.params.kernel;
        self.support_vectors
            .iter_rows()
            .zip(&self.dual_coef)
            .map(|(sv, &b)| b * k.eval(sv, row))
            .sum::<f64>()
            + self.bias
    }
}

/// Lazily computed kernel rows with FIFO eviction.
struct KernelCache<'a> {
    x: &'a Matrix,
    kernel: Kernel,
    rows: Vec<Option<Vec<f64>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl KernelCache<'_> {
    fn ensure(&mut self, i: usize, keep: usize) {
        if self.rows[i].is_some() {
            return;
        }
        if self.order.len() >= self.capacity {
            // never evict the row the caller is still holding on to
            let pos = if self.order.front() == Some(&keep) { 1 } else { 0 };
            if let Some(old) = self.order.remove(pos) {
                self.rows[old] = None;
            }
        }
        let xi = self.x.row(i);
        let r = self.x.iter_rows().map(|xj| self.kernel.eval(xi, xj)).collect();
        self.rows[i] = Some(r);
        self.order.push_back(i);
    }
}

/// Kernel matrix access: fully precomputed when it fits the budget.
enum Gram<'a> {
    Dense { n: usize, data: Vec<f64> },
    Lazy(KernelCache<'a>),
}

impl<'a> Gram<'a> {
    fn new(x: &'a Matrix, kernel: Kernel, cache_bytes: usize) -> Self {
        let n = x.rows();
        if n.saturating_mul(n).saturating_mul(8) <= cache_bytes {
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                let xi = x.row(i);
                for j in i..n {
                    let v = kernel.eval(xi, x.row(j));
                    data[i * n + j] = v;
                    data[j * n + i] = v;
                }
            }
            return Gram::Dense { n, data };
        }
        Gram::Lazy(KernelCache {
            x,
            kernel,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity: (cache_bytes / (8 * n.max(1))).max(2),
        })
    }

    fn ensure(&mut self, i: usize, keep: usize) {
        if let Gram::Lazy(c) = self {
            c.ensure(i, keep);
        }
    }

    /// Row `i`; must have been passed to `ensure` since the last eviction.
    fn row(&self, i: usize) -> &[f64] {
        match self {
            Gram::Dense { n, data } => &data[i * n..(i + 1) * n],
            Gram::Lazy(c) => c.rows[i].as_deref().expect("row ensured"),
        }
    }
}

pub fn fit_svr(x: &Matrix, y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    params.validate()?;
    let n = x.rows();
    if n < 2 {
        return Err(Error::invalid("rows", "at least 2 training rows are required"));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: y.len() });
    }
    let l = 2 * n;
    let c = params.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let mut alpha = vec![0.0; l];
    let p: Vec<f64> = (0..l)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();
    let mut grad = p.clone();
    let diag: Vec<f64> = x.iter_rows().map(|r| params.kernel.eval(r, r)).collect();
    let mut gram = Gram::new(x, params.kernel, params.cache_bytes);
    // (variable, kernel row, sign) in the seeded scan order
    let visit: Vec<(usize, usize, f64)> = permutation(l, &mut seeded(params.seed))
        .into_iter()
        .map(|t| if t < n { (t, t, 1.0) } else { (t, t - n, -1.0) })
        .collect();
    let max_iter = params.max_iter.unwrap_or_else(|| 10_000usize.max(100 * n));

    let up = |a: f64, s: f64| if s > 0.0 { a < c } else { a > 0.0 };
    let low = |a: f64, s: f64| if s > 0.0 { a > 0.0 } else { a < c };

    // Variables that cannot enter the next working pair are dropped from the
    // scan every `shrink_every` iterations; the gradient stays exact for all.
    let shrink_every = l.min(1000);
    let mut active = visit.clone();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // first index: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for &(t, _, s) in &active {
            if up(alpha[t], s) && -s * grad[t] > gmax {
                gmax = -s * grad[t];
                i_sel = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        if i_sel != usize::MAX {
            gram.ensure(i_sel % n, usize::MAX);
            let ki = gram.row(i_sel % n);
            let kii = diag[i_sel % n];
            let mut best = f64::INFINITY;
            for &(t, r, s) in &active {
                if !low(alpha[t], s) {
                    continue;
                }
                let v = -s * grad[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > 0.0 {
                    let a = kii + diag[r] - 2.0 * ki[r];
                    let a = if a > 0.0 { a } else { TAU };
                    let score = -(b * b) / a;
                    if score < best {
                        best = score;
                        j_sel = t;
                    }
                }
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || gmax - gmin < params.tol {
            if active.len() < l {
                active.clone_from(&visit);
                continue;
            }
            converged = true;
            break;
        }
        iterations += 1;
        if iterations % shrink_every == 0 {
            active.retain(|&(t, _, s)| {
                let v = -s * grad[t];
                let (u, w) = (up(alpha[t], s), low(alpha[t], s));
                !((!u && v > gmax) || (!w && v < gmin))
            });
        }

        let (i, j) = (i_sel, j_sel);
        let (si, sj) = (sign(i), sign(j));
        gram.ensure(i % n, usize::MAX);
        gram.ensure(j % n, i % n);
        let (ki, kj) = (gram.row(i % n), gram.row(j % n));
        let (kii, kjj, kij) = (diag[i % n], diag[j % n], ki[j % n]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if si != sj {
            let quad = kii + kjj + 2.0 * (si * sj * kij);
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = kii + kjj - 2.0 * (si * sj * kij);
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let (wi, wj) = (si * di, sj * dj);
        for t in 0..n {
            let d = wi * ki[t] + wj * kj[t];
            grad[t] += d;
            grad[t + n] -= d;
        }
    }

    // bias from free variables, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    for t in 0..l {
        let s = sign(t);
        let yg = s * grad[t];
        if alpha[t] >= c {
            if s < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if s > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 { free_sum / free_n as f64 } else { (ub + lb) / 2.0 };
    let objective = 0.5 * (0..l).map(|t| alpha[t] * (grad[t] + p[t])).sum::<f64>();

    let mut sv_rows = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        let beta = alpha[i] - alpha[i + n];
        if beta != 0.0 {
            sv_rows.push(i);
            dual_coef.push(beta);
        }
    }
    let support_vectors = if sv_rows.is_empty() { Matrix::zeros(0, x.cols()) } else { x.select_rows(&sv_rows) };
    Ok(SvrModel {
        params: *params,
        support_vectors,
        dual_coef,
        bias: -rho,
        objective,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ols::fit_ols;

    fn line(xs: impl Iterator<Item = f64>) -> (Matrix, Vec<f64>) {
        let xs: Vec<f64> = xs.collect();
        let y = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        (Matrix::from_vec(xs.len(), 1, xs).unwrap(), y)
    }

    #[test]
    fn linear_kernel_recovers_line() {
        let (x, y) = line((0..10).map(f64::from));
        let params = SvrParams {
            epsilon: 0.01,
            ..SvrParams::new(Kernel::Linear, 10.0)
        };
        let m = fit_svr(&x, &y, &params).unwrap();
        assert!(m.converged);
        let ols = fit_ols(&x, &y).unwrap();
        let (xt, yt) = line([0.5, 3.25, 7.75, 9.0].into_iter());
        let p = m.predict(&xt).unwrap();
        let o = ols.predict(&xt).unwrap();
        for ((a, b), t) in p.iter().zip(&o).zip(&yt) {
            assert!((a - t).abs() < 0.05, "svr {a} vs truth {t}");
            assert!((a - b).abs() < 0.05, "svr {a} vs ols {b}");
        }
    }

    #[test]
    fn flat_target_stays_inside_tube() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, -1.0]]).unwrap();
        let y = [0.7; 4];
        for kernel in [Kernel::Linear, Kernel::Rbf { gamma: 0.5 }] {
            let m = fit_svr(&x, &y, &SvrParams::new(kernel, 1.0)).unwrap();
            for p in m.predict(&x).unwrap() {
                assert!((p - 0.7).abs() <= 0.1 + 1e-12);
            }
        }
    }

    #[test]
    fn free_support_vectors_sit_on_the_tube() {
        let x = Matrix::from_vec(12, 1, (0..12).map(|i| f64::from(i) / 4.0).collect()).unwrap();
        let y: Vec<f64> = (0..12).map(|i| libm::sin(f64::from(i) / 2.0)).collect();
        let params = SvrParams {
            epsilon: 0.05,
            tol: 1e-6,
            ..SvrParams::new(Kernel::Rbf { gamma: 1.0 }, 5.0)
        };
        let m = fit_svr(&x, &y, &params).unwrap();
        let preds = m.predict(&x).unwrap();
        for (b, sv) in m.dual_coef.iter().zip(m.support_vectors.iter_rows()) {
            assert!(b.abs() <= params.c + 1e-12);
            if b.abs() < params.c - 1e-9 {
                let i = (sv[0] * 4.0).round() as usize;
                let err = (preds[i] - y[i]).abs();
                assert!((err - params.epsilon).abs() < 1e-4, "free SV {i}: |err| = {err}");
            }
        }
    }

    #[test]
    fn parameter_errors() {
        let (x, y) = line((0..4).map(f64::from));
        assert!(fit_svr(&x, &y, &SvrParams::new(Kernel::Linear, 0.0)).is_err());
        assert!(fit_svr(&x, &y, &SvrParams::new(Kernel::Rbf { gamma: 0.0 }, 1.0)).is_err());
        assert!(fit_svr(&x, &y, &SvrParams::new(Kernel::Rbf { gamma: -1.0 }, 1.0)).is_err());
        let one = Matrix::from_rows(&[[1.0]]).unwrap();
        assert!(fit_svr(&one, &[1.0], &SvrParams::default()).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let x = Matrix::from_vec(20, 1, (0..20).map(|i| f64::from(i % 7)).collect()).unwrap();
        let y: Vec<f64> = (0..20).map(|i| f64::from(i % 5)).collect();
        let params = SvrParams {
            seed: 9,
            ..SvrParams::new(Kernel::Rbf { gamma: 0.3 }, 10.0)
        };
        assert_eq!(fit_svr(&x, &y, &params).unwrap(), fit_svr(&x, &y, &params).unwrap());
    }

    #[test]
    fn tiny_cache_matches_precomputed_kernel() {
        let x = Matrix::from_vec(30, 2, (0..60).map(|i| (f64::from(i) * 0.7).sin()).collect()).unwrap();
        let y: Vec<f64> = (0..30).map(|i| (f64::from(i) * 0.3).cos()).collect();
        let dense = SvrParams::new(Kernel::Rbf { gamma: 0.8 }, 5.0);
        let lazy = SvrParams { cache_bytes: 3 * 30 * 8, ..dense };
        let (a, b) = (fit_svr(&x, &y, &dense).unwrap(), fit_svr(&x, &y, &lazy).unwrap());
        assert_eq!((a.dual_coef, a.bias, a.iterations), (b.dual_coef, b.bias, b.iterations));
    }
}
