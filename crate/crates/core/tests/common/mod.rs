#![allow(dead_code)]

use csa::l1_solver::LassoPath;
use csa::rng::stream;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Asymptotic Kolmogorov 1% critical value constant.
pub const KS_1PCT: f64 = 1.628;

/// One-sample KS statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn ks_critical(n: usize) -> f64 {
    KS_1PCT / (n as f64).sqrt()
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_two_sample_critical(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_1PCT * ((n + m) / (n * m)).sqrt()
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Random instance for the solver oracle: Gaussian `A` with `M <= 8`,
/// `N <= 14`, and either a planted sparse or a generic right-hand side.
pub fn random_instance(seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = stream(seed ^ 0x5eed);
    let m = rng.random_range(2..=8);
    let n = rng.random_range(m + 1..=14);
    let a = gaussian_matrix(m, n, seed);
    let b = if seed.is_multiple_of(2) {
        let s = rng.random_range(1..=m.div_ceil(2));
        let mut x = DVector::zeros(n);
        for j in rand::seq::index::sample(&mut rng, n, s) {
            x[j] = StandardNormal.sample(&mut rng);
        }
        &a * x
    } else {
        DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng))
    };
    (a, b)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for t in i..k {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

/// `min |x|_1` subject to `A x = b` for full-row-rank `A`, by enumerating
/// every basic solution. Some optimal solution of the LP is a vertex, and
/// every vertex is supported on `M` linearly independent columns.
pub fn brute_force_l1(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let (m, n) = a.shape();
    let mut best = f64::INFINITY;
    for cols in combinations(n, m) {
        let sub = DMatrix::from_fn(m, m, |i, j| a[(i, cols[j])]);
        let svd = sub.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 1e-10 * smax {
            continue;
        }
        if let Some(x) = sub.lu().solve(b) {
            best = best.min(x.lp_norm(1));
        }
    }
    best
}

/// Largest KKT violation over every breakpoint of a LASSO path, relative to
/// `max(1, lambda)`: correlations of active columns equal `lambda` with the
/// coefficient's sign, inactive correlations stay below `lambda`.
pub fn kkt_violation(a: &DMatrix<f64>, b: &DVector<f64>, path: &LassoPath) -> f64 {
    let n = a.ncols();
    let mut worst = 0.0f64;
    for p in &path.points {
        let x = p.dense(n);
        let c = a.tr_mul(&(b - a * &x));
        let lambda = p.lambda;
        let scale = lambda.max(1.0);
        for j in 0..n {
            let v = if x[j] != 0.0 {
                let mut v = (c[j].abs() - lambda).abs();
                if lambda > 1e-8 && x[j].signum() != c[j].signum() {
                    v = v.max(c[j].abs() + lambda);
                }
                v
            } else {
                (c[j].abs() - lambda).max(0.0)
            };
            worst = worst.max(v / scale);
        }
    }
    worst
}
