//! Implementation-vs-oracle comparisons on randomized instances.

use std::collections::BTreeSet;

use rand::Rng;
use songsim_core::cooccur::build_similarity_graph;
use songsim_core::ingest::UserHistory;
use songsim_core::linalg::{dot, Matrix};
use songsim_core::models::{fit_knn, fit_lsh, fit_ols, fit_svr, Kernel, LshParams, Regressor, SvrParams};
use songsim_core::rng::{seeded, standard_normal};
use songsim_core::svd::{fit_truncated_svd, project};
use songsim_core::tfidf::SparseDocMatrix;
use songsim_oracles as oracle;

fn random_histories(rng: &mut impl Rng) -> Vec<Vec<u32>> {
    let n_songs = rng.random_range(2..=20u32);
    let n_users = rng.random_range(1..=10usize);
    (0..n_users)
        .map(|_| {
            let len = rng.random_range(1..=n_songs as usize);
            let mut h: Vec<u32> = (0..len).map(|_| rng.random_range(0..n_songs)).collect();
            h.sort_unstable();
            h.dedup();
            h
        })
        .collect()
}

#[test]
fn cooccurrence_matches_incidence_oracle() {
    let mut rng = seeded(2024);
    for _ in 0..100 {
        let raw = random_histories(&mut rng);
        let histories: Vec<UserHistory> = raw
            .iter()
            .enumerate()
            .map(|(u, h)| UserHistory {
                user_id: u as u32,
                song_ids: h.iter().copied().collect::<BTreeSet<_>>(),
            })
            .collect();
        let g = build_similarity_graph(&histories).unwrap();
        let want = oracle::incidence_cosine(&raw);
        let got: Vec<((u32, u32), f64)> = g.edges().map(|(a, b, s)| ((a, b), s)).collect();
        let want: Vec<((u32, u32), f64)> = want.into_iter().collect();
        assert_eq!(got, want);
        assert!(g.is_consistent());
    }
}

fn gaussian_rows(rows: usize, cols: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| standard_normal(rng)).collect()).collect()
}

fn relative_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn truncated_svd_matches_dense_oracle() {
    let mut rng = seeded(7);
    for trial in 0..50 {
        let m = rng.random_range(1..=50);
        let n = rng.random_range(1..=50);
        let k = rng.random_range(1..=m.min(n));
        let rows = gaussian_rows(m, n, &mut rng);
        let a = Matrix::from_rows(&rows).unwrap();
        let svd = fit_truncated_svd(&a, k, trial).unwrap();
        let (want, vt) = oracle::dense_svd(&rows);
        for (j, (&got, &exp)) in svd.singular_values.iter().zip(&want).enumerate() {
            assert!(relative_close(got, exp, 1e-6), "trial {trial} ({m}x{n}, k={k}) σ{j}: {got} vs {exp}");
        }
        // subspace check whenever the spectrum separates at k
        let gap = if k < want.len() { want[k - 1] - want[k] } else { f64::INFINITY };
        if gap > 1e-3 {
            let ours: Vec<Vec<f64>> = svd.components.iter_rows().map(<[f64]>::to_vec).collect();
            let angle = oracle::max_principal_angle(&ours, &vt[..k]);
            assert!(angle < 1e-4, "trial {trial}: subspace angle {angle}");
        }
        for i in 0..k {
            for j in 0..k {
                let d = dot(svd.components.row(i), svd.components.row(j));
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn truncated_svd_named_cases() {
    let mut rng = seeded(11);
    // rank one: outer product
    let u: Vec<f64> = (0..8).map(|_| standard_normal(&mut rng)).collect();
    let v: Vec<f64> = (0..6).map(|_| standard_normal(&mut rng)).collect();
    let a = Matrix::from_rows(&u.iter().map(|ui| v.iter().map(|vj| ui * vj).collect::<Vec<_>>()).collect::<Vec<_>>()).unwrap();
    let svd = fit_truncated_svd(&a, 1, 3).unwrap();
    let proj = a.matmul(&svd.components.transpose()).unwrap();
    let recon = proj.matmul(&svd.components).unwrap();
    let err = recon.as_slice().iter().zip(a.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "rank-1 reconstruction error {err}");

    // 5x4, full k
    let rows = gaussian_rows(5, 4, &mut rng);
    let svd = fit_truncated_svd(&Matrix::from_rows(&rows).unwrap(), 4, 0).unwrap();
    for (g, w) in svd.singular_values.iter().zip(oracle::dense_singular_values(&rows)) {
        assert!(relative_close(*g, w, 1e-6));
    }
}

#[test]
fn projection_reconstruction_and_inner_products() {
    let mut rng = seeded(5);
    let (docs, terms) = (12, 7);
    let mut entries = Vec::new();
    for d in 0..docs {
        for t in 0..terms as u32 {
            if rng.random::<f64>() < 0.5 {
                entries.push((d, t, rng.random::<f64>()));
            }
        }
    }
    let sp = SparseDocMatrix::from_triplets(docs, terms, entries).unwrap();
    let dense = sp.to_dense();
    let rows: Vec<Vec<f64>> = dense.iter_rows().map(<[f64]>::to_vec).collect();

    // full rank: inner products preserved
    let full = fit_truncated_svd(&sp, terms, 1).unwrap();
    let p = project(&sp, &full).unwrap();
    for i in 0..docs {
        for j in 0..docs {
            let a = dot(dense.row(i), dense.row(j));
            let b = dot(p.row(i), p.row(j));
            assert!((a - b).abs() < 1e-6);
        }
    }

    // truncated: residual energy equals the discarded spectrum
    let k = 3;
    let svd = fit_truncated_svd(&sp, k, 1).unwrap();
    let recon = project(&sp, &svd).unwrap().matmul(&svd.components).unwrap();
    let err2: f64 = recon.as_slice().iter().zip(dense.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum();
    let tail: f64 = oracle::dense_singular_values(&rows)[k..].iter().map(|s| s * s).sum();
    assert!((err2 - tail).abs() < 1e-8 * tail.max(1.0), "{err2} vs {tail}");
}

fn kernel_matrix(x: &[Vec<f64>], kernel: Kernel) -> Vec<Vec<f64>> {
    x.iter().map(|a| x.iter().map(|b| kernel.eval(a, b)).collect()).collect()
}

#[test]
fn svr_dual_objective_matches_qp_oracle() {
    let mut rng = seeded(99);
    for trial in 0..20u64 {
        let n = rng.random_range(2..=12);
        let dim = rng.random_range(1..=3);
        let x = gaussian_rows(n, dim, &mut rng);
        let y: Vec<f64> = x.iter().map(|r| r.iter().sum::<f64>() + 0.5 * standard_normal(&mut rng)).collect();
        let kernel = if trial % 2 == 0 { Kernel::Linear } else { Kernel::Rbf { gamma: 0.5 } };
        let c = [1.0, 10.0][(trial / 2 % 2) as usize];
        let params = SvrParams {
            epsilon: 0.1,
            seed: trial,
            ..SvrParams::new(kernel, c)
        };
        let model = fit_svr(&Matrix::from_rows(&x).unwrap(), &y, &params).unwrap();
        assert!(model.converged);
        assert!(model.dual_coef.iter().all(|b| b.abs() <= c + 1e-12));
        let want = oracle::svr_dual_optimum(&kernel_matrix(&x, kernel), &y, c, 0.1, 50_000);
        assert!(
            (model.objective - want).abs() <= 1e-2 * want.abs(),
            "trial {trial}: smo {} vs oracle {want}",
            model.objective
        );
    }
}

#[test]
fn ols_residuals_are_orthogonal() {
    let mut rng = seeded(1);
    let rows = gaussian_rows(40, 5, &mut rng);
    let y: Vec<f64> = rows.iter().map(|r| r[0] - 2.0 * r[3] + standard_normal(&mut rng)).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let m = fit_ols(&x, &y).unwrap();
    let resid: Vec<f64> = m.predict(&x).unwrap().iter().zip(&y).map(|(p, t)| t - p).collect();
    assert!(resid.iter().sum::<f64>().abs() < 1e-8);
    for j in 0..5 {
        assert!(dot(&x.column(j), &resid).abs() < 1e-8);
    }

    // exact linear data: training R² = 1
    let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[1] - r[2] + 0.25).collect();
    let m = fit_ols(&x, &y).unwrap();
    let r2 = songsim_core::metrics::r2_score(&y, &m.predict(&x).unwrap()).unwrap();
    assert!((r2 - 1.0).abs() < 1e-9);
}

#[test]
fn knn_matches_brute_force() {
    let mut rng = seeded(8);
    let rows = gaussian_rows(120, 4, &mut rng);
    let y: Vec<f64> = (0..120).map(|i| i as f64).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let m = fit_knn(&x, &y, 7).unwrap();
    for q in gaussian_rows(25, 4, &mut rng) {
        assert_eq!(m.neighbors(&q), oracle::brute_force_knn(&rows, &q, 7));
    }
}

#[test]
fn lsh_agrees_with_exact_when_candidates_cover_true_neighbors() {
    let mut rng = seeded(13);
    let rows = gaussian_rows(60, 3, &mut rng);
    let y: Vec<f64> = rows.iter().map(|r| r[0] * r[1]).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let params = LshParams {
        k: 3,
        n_trees: 2,
        hash_len: 6,
        candidate_multiplier: 2,
        seed: 4,
    };
    let lsh = fit_lsh(&x, &y, &params).unwrap();
    let exact = fit_knn(&x, &y, 3).unwrap();
    let mut covered = 0;
    for q in gaussian_rows(200, 3, &mut rng) {
        let truth = oracle::brute_force_knn(&rows, &q, 3);
        let cand = lsh.candidates(&q);
        if truth.iter().all(|t| cand.binary_search(t).is_ok()) {
            covered += 1;
            assert_eq!(lsh.predict_row(&q), exact.predict_row(&q));
        }
    }
    assert!(covered > 0);
}
