use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Regressor;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, dot, Matrix};

/// Ridge jitter added to the Gram diagonal so rank-deficient designs stay solvable.
pub const GRAM_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// Ordinary least squares through the normal equations of the centered
/// design. If the Cholesky factorization still breaks down numerically the
/// jitter is raised by factors of 100 until it succeeds.
pub fn fit_ols(x: &Matrix, y: &[f64]) -> Result<LinearModel> {
    let (n, m) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::Empty("training rows"));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: y.len() });
    }
    let nf = n as f64;
    let mut x_mean = vec![0.0; m];
    for r in x.iter_rows() {
        for (acc, v) in x_mean.iter_mut().zip(r) {
            *acc += v;
        }
    }
    x_mean.iter_mut().for_each(|v| *v /= nf);
    let y_mean = y.iter().sum::<f64>() / nf;

    let mut gram = Matrix::zeros(m, m);
    let mut rhs = vec![0.0; m];
    let mut centered = vec![0.0; m];
    for (r, &yi) in x.iter_rows().zip(y) {
        for ((c, v), mu) in centered.iter_mut().zip(r).zip(&x_mean) {
            *c = v - mu;
        }
        let yc = yi - y_mean;
        for a in 0..m {
            let ca = centered[a];
            if ca == 0.0 {
                continue;
            }
            rhs[a] += ca * yc;
            let row = gram.row_mut(a);
            for b in a..m {
                row[b] += ca * centered[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }

    let mut jitter = GRAM_JITTER;
    let weights = loop {
        let mut g = gram.clone();
        for a in 0..m {
            g[(a, a)] += jitter;
        }
        if let Some(w) = cholesky_solve(&g, &rhs) {
            break w;
        }
        jitter *= 100.0;
    };
    let intercept = y_mean - dot(&weights, &x_mean);
    Ok(LinearModel { weights, intercept })
}

impl Regressor for LinearModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.intercept
    }
}
