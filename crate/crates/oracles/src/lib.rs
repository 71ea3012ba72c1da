//! Slow, obviously-correct reference computations for the test suites.
//!
//! Nothing here shares code with `songsim-core`: inputs and outputs are plain
//! vectors so that each oracle stays independent of the implementation it
//! checks.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

/// Cosine similarity of every song pair from binary song x user incidence
/// vectors, keyed by `(smaller, larger)` song id. Pairs with zero dot product
/// are absent.
pub fn incidence_cosine(histories: &[Vec<u32>]) -> BTreeMap<(u32, u32), f64> {
    let songs: Vec<u32> = {
        let mut s: Vec<u32> = histories.iter().flatten().copied().collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let vectors: Vec<Vec<f64>> = songs
        .iter()
        .map(|song| histories.iter().map(|h| if h.contains(song) { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut out = BTreeMap::new();
    for i in 0..songs.len() {
        for j in i + 1..songs.len() {
            let (x, y) = (&vectors[i], &vectors[j]);
            let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            if xy == 0.0 {
                continue;
            }
            let xx: f64 = x.iter().map(|a| a * a).sum();
            let yy: f64 = y.iter().map(|b| b * b).sum();
            let s = (xy / (xx * yy).sqrt()).clamp(-1.0, 1.0);
            out.insert((songs[i], songs[j]), s);
        }
    }
    out
}

/// Singular values (descending) by nalgebra's dense bidiagonalization SVD.
pub fn dense_singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    dense_svd(rows).0
}

/// Singular values (descending) and the matching right singular vectors as rows.
pub fn dense_svd(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut pairs: Vec<(f64, Vec<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, vt.row(i).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.into_iter().unzip()
}

/// Largest principal angle (radians) between the spans of two sets of
/// orthonormal row vectors of equal count.
pub fn max_principal_angle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let k = a.len();
    let m = DMatrix::from_fn(k, b.len(), |i, j| a[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum::<f64>());
    let smallest = m.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
    smallest.clamp(-1.0, 1.0).acos()
}

/// Indices of the `k` rows nearest to `q` by full sort on `(distance, index)`.
pub fn brute_force_knn(rows: &[Vec<f64>], q: &[f64], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Optimal value of the epsilon-SVR dual
///
/// ```text
/// min_{a, a*}  ½ (a - a*)ᵀ K (a - a*) + ε Σ (a + a*) - yᵀ (a - a*)
/// s.t.         Σ (a - a*) = 0,  0 ≤ a, a* ≤ C
/// ```
///
/// solved by accelerated projected gradient (FISTA with restarts). The
/// projection onto box ∩ hyperplane is found by bisection on the multiplier.
pub fn svr_dual_optimum(kernel: &[Vec<f64>], y: &[f64], c: f64, epsilon: f64, iterations: usize) -> f64 {
    let n = y.len();
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |t: usize, u: usize| sign(t) * sign(u) * kernel[t % n][u % n];
    let p: Vec<f64> = (0..l).map(|t| epsilon - sign(t) * y[t % n]).collect();
    let objective = |a: &[f64]| {
        let mut v = 0.0;
        for t in 0..l {
            let mut qa = 0.0;
            for u in 0..l {
                qa += q(t, u) * a[u];
            }
            v += a[t] * (0.5 * qa + p[t]);
        }
        v
    };
    let gradient = |a: &[f64]| -> Vec<f64> {
        (0..l)
            .map(|t| (0..l).map(|u| q(t, u) * a[u]).sum::<f64>() + p[t])
            .collect()
    };
    // Lipschitz bound: max absolute row sum of Q
    let lip = (0..l)
        .map(|t| (0..l).map(|u| q(t, u).abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let project = |v: &[f64]| -> Vec<f64> {
        let at = |lambda: f64| -> (f64, Vec<f64>) {
            let a: Vec<f64> = (0..l).map(|t| (v[t] - lambda * sign(t)).clamp(0.0, c)).collect();
            let s = (0..l).map(|t| sign(t) * a[t]).sum();
            (s, a)
        };
        let bound = v.iter().map(|x| x.abs()).fold(c, f64::max) + c;
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi)).1
    };

    let mut x = vec![0.0; l];
    let mut z = x.clone();
    let mut t_k = 1.0f64;
    let mut f_prev = objective(&x);
    for _ in 0..iterations {
        let g = gradient(&z);
        let step: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lip).collect();
        let x_next = project(&step);
        let f_next = objective(&x_next);
        if f_next > f_prev {
            // adaptive restart
            t_k = 1.0;
            z = x.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt()) / 2.0;
        z = x_next
            .iter()
            .zip(&x)
            .map(|(xn, xo)| xn + (t_k - 1.0) / t_next * (xn - xo))
            .collect();
        x = x_next;
        t_k = t_next;
        f_prev = f_next;
    }
    f_prev
}
