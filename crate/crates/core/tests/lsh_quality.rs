use rand::Rng;
use songsim_core::linalg::Matrix;
use songsim_core::metrics::r2_score;
use songsim_core::models::{fit_knn, fit_lsh, LshParams, Regressor};
use songsim_core::rng::{seeded, standard_normal};

pub const DIM: usize = 8;

/// Rows drawn around a handful of cluster centers with a smooth label.
pub fn clustered_rows(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = seeded(seed);
    let centers: Vec<Vec<f64>> = (0..12).map(|_| (0..DIM).map(|_| 3.0 * standard_normal(&mut rng)).collect()).collect();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let c = &centers[rng.random_range(0..centers.len())];
        let row: Vec<f64> = c.iter().map(|m| m + standard_normal(&mut rng)).collect();
        y.push((row[0] / 3.0).sin() + 0.5 * (row[1] / 3.0).cos() + 0.1 * standard_normal(&mut rng));
        rows.push(row);
    }
    (rows, y)
}

#[test]
fn default_forest_recall_and_r2_gap() {
    let k = 10;
    let mut recalls = Vec::new();
    for seed in 0..5u64 {
        let (rows, y) = clustered_rows(1250, seed);
        let (train_rows, test_rows) = rows.split_at(1000);
        let (train_y, test_y) = y.split_at(1000);
        let x = Matrix::from_rows(train_rows).unwrap();
        let params = LshParams { k, seed, ..LshParams::default() };
        let lsh = fit_lsh(&x, train_y, &params).unwrap();
        let exact = fit_knn(&x, train_y, k).unwrap();
        let mut hit = 0usize;
        for q in test_rows {
            let truth = exact.neighbors(q);
            let approx = lsh.neighbors(q);
            hit += approx.iter().filter(|i| truth.contains(i)).count();
        }
        recalls.push(hit as f64 / (k * test_rows.len()) as f64);

        let xt = Matrix::from_rows(test_rows).unwrap();
        let r2_exact = r2_score(test_y, &exact.predict(&xt).unwrap()).unwrap();
        let r2_lsh = r2_score(test_y, &lsh.predict(&xt).unwrap()).unwrap();
        assert!((r2_exact - r2_lsh).abs() <= 0.15, "seed {seed}: exact {r2_exact} lsh {r2_lsh}");
    }
    let mean = recalls.iter().sum::<f64>() / recalls.len() as f64;
    assert!(mean >= 0.8, "mean recall {mean} ({recalls:?})");
}

#[test]
fn stored_rows_are_always_candidates() {
    let (rows, y) = clustered_rows(300, 3);
    let x = Matrix::from_rows(&rows).unwrap();
    let lsh = fit_lsh(&x, &y, &LshParams { k: 3, ..LshParams::default() }).unwrap();
    for (i, r) in rows.iter().enumerate().step_by(7) {
        assert!(lsh.candidates(r).binary_search(&i).is_ok());
    }
}
