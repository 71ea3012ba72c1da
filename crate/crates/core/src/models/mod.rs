//! The four regressor families and grid-search cross-validation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub mod grid;
pub mod knn;
pub mod lsh;
pub mod ols;
pub mod svr;

pub use grid::{grid_search, svr_default_grid, CvScore, GridResult, GridSpec, DEFAULT_FOLDS};
pub use knn::{fit_knn, KnnModel};
pub use lsh::{fit_lsh, LshForest, LshParams};
pub use ols::{fit_ols, LinearModel};
pub use svr::{fit_svr, Kernel, SvrModel, SvrParams};

/// A fitted model that maps feature rows to predictions. Prediction is
/// read-only, so fitted models can be shared across threads.
pub trait Regressor {
    fn n_features(&self) -> usize;

    fn predict_row(&self, row: &[f64]) -> f64;

    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.predict_row(r)).collect())
    }
}

/// A model family with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ModelSpec {
    Ols,
    Svr(SvrParams),
    Knn { k: usize },
    Lsh(LshParams),
}

impl ModelSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Ols => "ols",
            ModelSpec::Svr(_) => "svr",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::Lsh(_) => "lsh",
        }
    }

    /// Short hyperparameter summary, e.g. `kernel=rbf gamma=0.001 C=10`.
    pub fn describe(&self) -> String {
        match self {
            ModelSpec::Ols => String::from("-"),
            ModelSpec::Svr(p) => match p.kernel {
                Kernel::Linear => format!("kernel=linear C={} eps={}", p.c, p.epsilon),
                Kernel::Rbf { gamma } => format!("kernel=rbf gamma={} C={} eps={}", gamma, p.c, p.epsilon),
            },
            ModelSpec::Knn { k } => format!("k={k}"),
            ModelSpec::Lsh(p) => format!("k={} trees={} bits={} mult={}", p.k, p.n_trees, p.hash_len, p.candidate_multiplier),
        }
    }

    pub fn fit(&self, x: &Matrix, y: &[f64]) -> Result<Model> {
        Ok(match self {
            ModelSpec::Ols => Model::Ols(fit_ols(x, y)?),
            ModelSpec::Svr(p) => Model::Svr(fit_svr(x, y, p)?),
            ModelSpec::Knn { k } => Model::Knn(fit_knn(x, y, *k)?),
            ModelSpec::Lsh(p) => Model::Lsh(fit_lsh(x, y, p)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Model {
    Ols(LinearModel),
    Svr(SvrModel),
    Knn(KnnModel),
    Lsh(LshForest),
}

impl Regressor for Model {
    fn n_features(&self) -> usize {
        match self {
            Model::Ols(m) => m.n_features(),
            Model::Svr(m) => m.n_features(),
            Model::Knn(m) => m.n_features(),
            Model::Lsh(m) => m.n_features(),
        }
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            Model::Ols(m) => m.predict_row(row),
            Model::Svr(m) => m.predict_row(row),
            Model::Knn(m) => m.predict_row(row),
            Model::Lsh(m) => m.predict_row(row),
        }
    }
}
