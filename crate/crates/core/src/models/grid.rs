use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Kernel, Model, ModelSpec, Regressor, SvrParams};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::r2_score;
use crate::rng::{permutation, seeded};

pub const DEFAULT_FOLDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub candidates: Vec<ModelSpec>,
    pub folds: usize,
    /// Seeds the fold assignment.
    pub seed: u64,
}

impl GridSpec {
    pub fn new(candidates: Vec<ModelSpec>) -> Self {
        GridSpec {
            candidates,
            folds: DEFAULT_FOLDS,
            seed: 0,
        }
    }

    pub fn single(spec: ModelSpec) -> Self {
        Self::new(alloc::vec![spec])
    }
}

/// `{linear} x C ∈ {1, 10, 100}` followed by `{rbf} x C ∈ {1, 10, 100} x γ ∈ {0.001, 0.0001}`.
pub fn svr_default_grid(epsilon: f64, seed: u64) -> Vec<ModelSpec> {
    const CS: [f64; 3] = [1.0, 10.0, 100.0];
    const GAMMAS: [f64; 2] = [0.001, 0.0001];
    let base = |kernel, c| {
        ModelSpec::Svr(SvrParams {
            epsilon,
            seed,
            ..SvrParams::new(kernel, c)
        })
    };
    let linear = CS.iter().map(|&c| base(Kernel::Linear, c));
    let rbf = CS
        .iter()
        .flat_map(|&c| GAMMAS.iter().map(move |&gamma| (c, gamma)))
        .map(|(c, gamma)| base(Kernel::Rbf { gamma }, c));
    linear.chain(rbf).collect()
}

/// Cross-validated score of one grid candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub spec: ModelSpec,
    pub fold_r2: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over folds.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_index: usize,
    pub best: ModelSpec,
    /// The best candidate refitted on all training rows.
    pub model: Model,
    /// One entry per candidate, in grid order.
    pub table: Vec<CvScore>,
}

impl GridResult {
    pub fn best_score(&self) -> &CvScore {
        &self.table[self.best_index]
    }
}

/// k-fold cross-validation over every candidate, maximizing mean validation
/// R². The first candidate wins ties. The winner is refitted on all rows.
pub fn grid_search(grid: &GridSpec, x: &Matrix, y: &[f64]) -> Result<GridResult> {
    if grid.candidates.is_empty() {
        return Err(Error::Empty("grid"));
    }
    if grid.folds < 2 {
        return Err(Error::invalid("folds", "at least 2 folds are required"));
    }
    if y.len() != x.rows() {
        return Err(Error::LengthMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    let n = x.rows();
    let perm = permutation(n, &mut seeded(grid.seed));
    let mut fold_of = alloc::vec![0usize; n];
    for (pos, &row) in perm.iter().enumerate() {
        fold_of[row] = pos % grid.folds;
    }
    let mut folds = Vec::with_capacity(grid.folds);
    for f in 0..grid.folds {
        let (valid, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == f);
        if valid.len() < 2 || train.len() < 2 {
            return Err(Error::FoldTooSmall {
                fold: f,
                rows: valid.len().min(train.len()),
            });
        }
        let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let yv: Vec<f64> = valid.iter().map(|&i| y[i]).collect();
        folds.push((x.select_rows(&train), yt, x.select_rows(&valid), yv));
    }

    let mut table = Vec::with_capacity(grid.candidates.len());
    for spec in &grid.candidates {
        let mut fold_r2 = Vec::with_capacity(folds.len());
        for (xt, yt, xv, yv) in &folds {
            let model = spec.fit(xt, yt)?;
            fold_r2.push(r2_score(yv, &model.predict(xv)?)?);
        }
        let mean = fold_r2.iter().sum::<f64>() / fold_r2.len() as f64;
        let var = fold_r2.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / fold_r2.len() as f64;
        table.push(CvScore {
            spec: *spec,
            fold_r2,
            mean,
            std: libm::sqrt(var),
        });
    }
    let best_index = table
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| if s.mean > table[best].mean { i } else { best });
    let best = grid.candidates[best_index];
    Ok(GridResult {
        best_index,
        best,
        model: best.fit(x, y)?,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize) -> (Matrix, Vec<f64>) {
        let x = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let y = (0..n).map(|i| 3.0 * i as f64 - 1.0).collect();
        (x, y)
    }

    #[test]
    fn svr_grid_has_nine_candidates() {
        let g = svr_default_grid(0.1, 0);
        assert_eq!(g.len(), 9);
        let linear = g.iter().filter(|s| matches!(s, ModelSpec::Svr(p) if p.kernel == Kernel::Linear)).count();
        assert_eq!(linear, 3);
    }

    #[test]
    fn picks_the_better_model() {
        let (x, y) = data(30);
        let grid = GridSpec::new(alloc::vec![ModelSpec::Knn { k: 10 }, ModelSpec::Ols]);
        let r = grid_search(&grid, &x, &y).unwrap();
        assert_eq!(r.best, ModelSpec::Ols);
        assert_eq!(r.table.len(), 2);
        assert!(r.best_score().mean > 0.999);
        assert_eq!(r.best_score().fold_r2.len(), 3);
    }

    #[test]
    fn single_and_duplicate_candidates() {
        let (x, y) = data(12);
        let r = grid_search(&GridSpec::single(ModelSpec::Knn { k: 2 }), &x, &y).unwrap();
        assert_eq!(r.best_index, 0);
        let r = grid_search(&GridSpec::new(alloc::vec![ModelSpec::Ols, ModelSpec::Ols]), &x, &y).unwrap();
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn small_folds_and_empty_grid() {
        let (x, y) = data(5);
        assert!(matches!(
            grid_search(&GridSpec::single(ModelSpec::Ols), &x, &y),
            Err(Error::FoldTooSmall { .. })
        ));
        assert!(grid_search(&GridSpec::new(alloc::vec![]), &x, &y).is_err());
    }
}
