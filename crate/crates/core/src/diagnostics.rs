//! Christoffel Gramians and coherence scans for univariate families.
//!
//! Every CSA sampling density for the supported families becomes a
//! Chebyshev-type weight after an affine map `z = z(x)` to `[-1, 1]`:
//!
//! - Jacobi: arcsine, `z = x`.
//! - Hermite: semicircle on `[-sqrt(2n), sqrt(2n)]`, `z = sqrt(2n) x`, with the
//!   extra factor `2 (1 - x^2)`.
//! - Laguerre: `4n Beta(1/2, 3/2)`, `z = 2n (1 + x)`, with the extra factor
//!   `1 - x`.
//!
//! Gauss-Chebyshev quadrature then integrates the smooth Christoffel-weighted
//! products spectrally.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::{BasisFamily, FamilyKind};

/// Convergence threshold on the largest entry change between doublings.
pub const GRAMIAN_TOL: f64 = 1e-11;

/// Node cap for the Gramian quadrature.
pub const MAX_QUAD_POINTS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramianReport {
    pub n: usize,
    pub family: FamilyKind,
    /// Row-major `(n + 1) x (n + 1)` entries of `R`.
    pub r: Vec<Vec<f64>>,
    /// `|R^{-1/2}|_1`, the largest absolute column sum.
    pub norm1_inv_sqrt: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub quad_points_used: usize,
    pub converged: bool,
    #[serde(skip)]
    pub sqrt: DMatrix<f64>,
    #[serde(skip)]
    pub inv_sqrt: DMatrix<f64>,
}

impl GramianReport {
    pub fn matrix(&self) -> DMatrix<f64> {
        let k = self.r.len();
        DMatrix::from_fn(k, k, |i, j| self.r[i][j])
    }

    /// Largest entry of `|R - I|`.
    pub fn deviation_from_identity(&self) -> f64 {
        let m = self.matrix();
        (m - DMatrix::identity(self.n + 1, self.n + 1)).amax()
    }
}

/// Map from the Chebyshev variable `x` to `z` and the smooth density factor.
fn chebyshev_map(kind: FamilyKind, n: usize) -> impl Fn(f64) -> (f64, f64) {
    let nf = n as f64;
    move |x: f64| match kind {
        FamilyKind::Jacobi { .. } => (x, 1.0),
        FamilyKind::Hermite => ((2.0 * nf).sqrt() * x, 2.0 * (1.0 - x * x)),
        FamilyKind::Laguerre => (2.0 * nf * (1.0 + x), 1.0 - x),
    }
}

fn gramian_at(family: &BasisFamily, n: usize, k: usize) -> DMatrix<f64> {
    let map = chebyshev_map(family.kind(), n);
    let size = n + 1;
    let nodes: Vec<f64> = (0..k)
        .map(|i| ((2 * i + 1) as f64 * PI / (2 * k) as f64).cos())
        .collect();
    let chunk = 256;
    let partial: Vec<DMatrix<f64>> = nodes
        .par_chunks(chunk)
        .map(|xs| {
            let mut acc = DMatrix::<f64>::zeros(size, size);
            for &x in xs {
                let (z, h) = map(x);
                let e = family.eval_unchecked(n, z);
                let v = DVector::from_vec(e.values);
                let scale = size as f64 * h / v.norm_squared();
                acc.syger(scale, &v, &v, 1.0);
            }
            acc
        })
        .collect();
    let mut r = partial
        .into_iter()
        .fold(DMatrix::zeros(size, size), |a, b| a + b);
    r /= k as f64;
    r.fill_upper_triangle_with_lower_triangle();
    r
}

/// The Christoffel Gramian `R_kl = int phi_k phi_l (N lambda_N) v_n dz` with
/// `N = n + 1`, together with its spectral data.
pub fn gramian(family: &BasisFamily, n: usize) -> Result<GramianReport> {
    if n > family.n_max() {
        return Err(Error::DegreeCap {
            requested: n,
            cap: family.n_max(),
        });
    }
    let (r, used, converged) = if n == 0 {
        (DMatrix::from_element(1, 1, 1.0), 1, true)
    } else {
        let mut k = 8 * (n + 1);
        let mut prev = gramian_at(family, n, k);
        loop {
            let next_k = 2 * k;
            if next_k > MAX_QUAD_POINTS {
                return Err(Error::NonConvergence(format!(
                    "Gramian for {:?}, n = {n}, not converged with {k} nodes",
                    family.kind()
                )));
            }
            let next = gramian_at(family, n, next_k);
            let change = (&next - &prev).amax();
            prev = next;
            k = next_k;
            if change < GRAMIAN_TOL {
                break (prev, k, true);
            }
        }
    };
    let eig = r.clone().symmetric_eigen();
    let lambda_min = eig.eigenvalues.min();
    let lambda_max = eig.eigenvalues.max();
    if !(lambda_min > 0.0) {
        return Err(Error::LinearAlgebra(format!(
            "Gramian is not positive definite (lambda_min = {lambda_min:e})"
        )));
    }
    let q = &eig.eigenvectors;
    let sqrt = q * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * q.transpose();
    let inv_sqrt = q * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * q.transpose();
    let norm1_inv_sqrt = norm1(&inv_sqrt);
    let size = n + 1;
    Ok(GramianReport {
        n,
        family: family.kind(),
        r: (0..size).map(|i| (0..size).map(|j| r[(i, j)]).collect()).collect(),
        norm1_inv_sqrt,
        lambda_min,
        lambda_max,
        quad_points_used: used,
        converged,
        sqrt,
        inv_sqrt,
    })
}

/// Largest absolute column sum.
pub fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Grid used for the supremum in a coherence scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Chebyshev-spaced grid points per unit of `n + 1`.
    pub points_per_degree: usize,
    /// Golden-section refinement around the grid maximiser.
    pub refine: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_degree: 50,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub family: FamilyKind,
    pub degrees: Vec<usize>,
    pub l_values: Vec<f64>,
    /// Location of the supremum for each degree.
    pub maximisers: Vec<f64>,
    /// Least-squares slope of `ln L(n)` against `ln n`.
    pub fitted_exponent: f64,
    pub grid: GridSpec,
}

/// Domain of the supremum in the coherence bound for degree `n`.
pub fn coherence_domain(kind: FamilyKind, n: usize) -> (f64, f64) {
    let nf = n as f64;
    match kind {
        FamilyKind::Jacobi { .. } => (-1.0, 1.0),
        FamilyKind::Hermite => (-(2.0 * nf).sqrt(), (2.0 * nf).sqrt()),
        FamilyKind::Laguerre => (0.0, 4.0 * nf),
    }
}

/// `(n + 1) max_k phi_k(z)^2 / sum_j phi_j(z)^2`.
fn weighted_peak(family: &BasisFamily, n: usize, z: f64) -> f64 {
    let e = family.eval_unchecked(n, z);
    let total = e.sum_squares();
    let peak = e.values.iter().map(|v| v * v).fold(0.0, f64::max);
    (n + 1) as f64 * peak / total
}

/// `L(n) = sup_z max_k (n + 1) lambda_{n+1}(z) phi_k(z)^2` over the domain
/// of the bound, and the maximiser.
pub fn coherence_value(family: &BasisFamily, n: usize, grid: GridSpec) -> Result<(f64, f64)> {
    if n > family.n_max() {
        return Err(Error::DegreeCap {
            requested: n,
            cap: family.n_max(),
        });
    }
    let points = grid.points_per_degree * (n + 1);
    if points < 10 * (n + 1) {
        return Err(Error::InvalidParameter(format!(
            "coherence grid of {points} points is coarser than 10 (n + 1)"
        )));
    }
    let (lo, hi) = coherence_domain(family.kind(), n);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    // Chebyshev-Lobatto points, endpoints included
    let zs: Vec<f64> = (0..points)
        .map(|i| mid - half * (PI * i as f64 / (points - 1) as f64).cos())
        .collect();
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &z) in zs.iter().enumerate() {
        let v = weighted_peak(family, n, z);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut arg = zs[best_i];
    if grid.refine {
        let a = zs[best_i.saturating_sub(1)];
        let b = zs[(best_i + 1).min(points - 1)];
        let (z, v) = golden_max(|z| weighted_peak(family, n, z), a, b);
        if v > best {
            best = v;
            arg = z;
        }
    }
    Ok((best, arg))
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `L(n)` for every degree and the fitted growth exponent.
pub fn coherence_scan(family: &BasisFamily, degrees: &[usize], grid: GridSpec) -> Result<CoherenceReport> {
    if degrees.is_empty() {
        return Err(Error::InvalidParameter("no degrees to scan".into()));
    }
    let values: Vec<(f64, f64)> = degrees
        .par_iter()
        .map(|&n| coherence_value(family, n, grid))
        .collect::<Result<_>>()?;
    let l_values: Vec<f64> = values.iter().map(|v| v.0).collect();
    let fitted_exponent = if degrees.len() >= 2 && degrees.iter().all(|&n| n > 0) {
        let xs: Vec<f64> = degrees.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = l_values.iter().map(|v| v.ln()).collect();
        slope(&xs, &ys)
    } else {
        f64::NAN
    };
    Ok(CoherenceReport {
        family: family.kind(),
        degrees: degrees.to_vec(),
        l_values,
        maximisers: values.iter().map(|v| v.1).collect(),
        fitted_exponent,
        grid,
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `M = ceil(L |R^{-1/2}|_1^2 s ln^3(max(s, 2)) ln N)`, natural logarithms.
pub fn sample_count_bound(norm1_inv_sqrt: f64, l: f64, s: usize, n_terms: usize) -> Result<u64> {
    if !(norm1_inv_sqrt > 0.0 && l > 0.0) || s == 0 || n_terms == 0 {
        return Err(Error::InvalidParameter("sample-count inputs must be positive".into()));
    }
    let sf = s as f64;
    let m = l * norm1_inv_sqrt.powi(2) * sf * sf.max(2.0).ln().powi(3) * (n_terms as f64).ln();
    Ok(m.ceil().max(0.0) as u64)
}
