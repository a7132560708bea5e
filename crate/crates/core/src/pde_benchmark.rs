//! One-dimensional stochastic diffusion benchmark.
//!
//! `-(a(x, z) u')' = 1` on `(0, 1)` with `u(0) = u(1) = 0` and
//! `log a(x, z) = abar + sigma_a sum_k sqrt(gamma_k) phi_k(x) z_k`, where
//! `(gamma_k, phi_k)` are Karhunen-Loeve pairs of the squared exponential
//! kernel `exp(-(x1 - x2)^2 / l_c^2)`. The quantity of interest is `u(1/2)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index_sets::MultiIndexSet;
use crate::orthopoly::{BasisFamily, FamilyKind};
use crate::preconditioner::DesignMatrix;
use crate::quadrature::gauss_legendre_interval;
use crate::sampling::sample_mc;

/// Field parameters; defaults are the two-dimensional benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldParams {
    pub d: usize,
    pub correlation_length: f64,
    pub sigma: f64,
    pub mean: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            d: 2,
            correlation_length: 0.1,
            sigma: 1.0,
            mean: 0.1,
        }
    }
}

impl FieldParams {
    /// Amplitude used for `d` random variables: 1 for `d = 2`, 0.017 for `d = 20`.
    pub fn benchmark(d: usize) -> Self {
        Self {
            d,
            sigma: if d >= 20 { 0.017 } else { 1.0 },
            ..Self::default()
        }
    }
}

/// Truncated KL expansion of the log-diffusivity.
#[derive(Debug, Clone)]
pub struct KLField {
    pub params: FieldParams,
    /// Leading eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Every eigenvalue of the discretised operator (for trace checks).
    pub spectrum: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `phi_k(x_i)` on the Nystrom nodes, `d` columns.
    node_values: DMatrix<f64>,
}

fn kernel(lc: f64, x1: f64, x2: f64) -> f64 {
    let r = (x1 - x2) / lc;
    (-r * r).exp()
}

/// Nystrom discretisation on Gauss-Legendre nodes (`max(4d, 256)` of them),
/// dense symmetric eigensolve, top `d` pairs kept with unit `L^2(0, 1)` norm.
pub fn kl_decompose(params: FieldParams) -> Result<KLField> {
    let d = params.d;
    let lc = params.correlation_length;
    if d == 0 || !(lc > 0.0) {
        return Err(Error::InvalidParameter("KL needs d >= 1 and l_c > 0".into()));
    }
    let q = (4 * d).max(256);
    let (nodes, weights) = gauss_legendre_interval(q, 0.0, 1.0);
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let k = DMatrix::from_fn(q, q, |i, j| sw[i] * kernel(lc, nodes[i], nodes[j]) * sw[j]);
    let eig = k.symmetric_eigen();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let top = spectrum[0];
    if spectrum[d - 1] <= 1e-13 * top {
        return Err(Error::InvalidParameter(format!(
            "KL eigenvalue {d} = {:e} is not numerically positive",
            spectrum[d - 1]
        )));
    }
    let mut node_values = DMatrix::zeros(q, d);
    for (col, &src) in order.iter().take(d).enumerate() {
        let v = eig.eigenvectors.column(src);
        let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..q {
            node_values[(i, col)] = sign * v[i] / sw[i];
        }
    }
    Ok(KLField {
        params,
        eigenvalues: spectrum[..d].to_vec(),
        spectrum,
        nodes,
        weights,
        node_values,
    })
}

impl KLField {
    pub fn dim(&self) -> usize {
        self.params.d
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node_values(&self) -> &DMatrix<f64> {
        &self.node_values
    }

    /// Nystrom interpolation `phi_k(x) = (1/gamma_k) int C(x, y) phi_k(y) dy`
    /// at arbitrary points; one column per mode.
    pub fn eigenfunctions_at(&self, xs: &[f64]) -> DMatrix<f64> {
        let lc = self.params.correlation_length;
        let d = self.dim();
        let mut out = DMatrix::zeros(xs.len(), d);
        for (r, &x) in xs.iter().enumerate() {
            for k in 0..d {
                let s: f64 = self
                    .nodes
                    .iter()
                    .zip(&self.weights)
                    .enumerate()
                    .map(|(j, (&y, &w))| w * kernel(lc, x, y) * self.node_values[(j, k)])
                    .sum();
                out[(r, k)] = s / self.eigenvalues[k];
            }
        }
        out
    }
}

/// Chebyshev-Gauss-Lobatto collocation on `[0, 1]` with `P + 1` points.
#[derive(Debug, Clone)]
pub struct CollocationSolver {
    pub p: usize,
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
    diff: DMatrix<f64>,
}

impl CollocationSolver {
    pub fn new(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidParameter("collocation needs P >= 2".into()));
        }
        let nodes: Vec<f64> = (0..=p)
            .map(|j| 0.5 * (1.0 - (PI * j as f64 / p as f64).cos()))
            .collect();
        let bary: Vec<f64> = (0..=p)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == p {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let n = p + 1;
        let mut diff = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                if i != j {
                    let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    diff[(i, j)] = v;
                    row += v;
                }
            }
            diff[(i, i)] = -row;
        }
        Ok(Self { p, nodes, bary, diff })
    }

    pub fn differentiation_matrix(&self) -> &DMatrix<f64> {
        &self.diff
    }

    /// Solve `-(a u')' = 1` with `a` given at the nodes.
    pub fn solve(&self, a: &[f64]) -> Result<DVector<f64>> {
        let n = self.p + 1;
        if a.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.len() });
        }
        if let Some(bad) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonFinite(format!("diffusivity value {bad}")));
        }
        // L = -D diag(a) D
        let mut ad = self.diff.clone();
        for (i, &ai) in a.iter().enumerate() {
            ad.row_mut(i).iter_mut().for_each(|v| *v *= -ai);
        }
        let mut l = &self.diff * ad;
        let mut rhs = DVector::from_element(n, 1.0);
        for &b in &[0, n - 1] {
            l.row_mut(b).fill(0.0);
            l[(b, b)] = 1.0;
            rhs[b] = 0.0;
        }
        l.lu()
            .solve(&rhs)
            .ok_or_else(|| Error::LinearAlgebra("singular collocation system".into()))
    }

    /// Barycentric interpolation of nodal values to `x`.
    pub fn interpolate(&self, values: &DVector<f64>, x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&xj, &wj)) in self.nodes.iter().zip(&self.bary).enumerate() {
            let dx = x - xj;
            if dx == 0.0 {
                return values[j];
            }
            let t = wj / dx;
            num += t * values[j];
            den += t;
        }
        num / den
    }
}

/// A KL field paired with a collocation solver, with the field's
/// eigenfunctions pre-tabulated on the collocation nodes.
#[derive(Debug, Clone)]
pub struct DiffusionModel {
    pub field: KLField,
    pub solver: CollocationSolver,
    /// `sigma sqrt(gamma_k) phi_k(x_i)`, collocation nodes by modes.
    modes: DMatrix<f64>,
}

impl DiffusionModel {
    pub fn new(params: FieldParams, p: usize) -> Result<Self> {
        let field = kl_decompose(params)?;
        let solver = CollocationSolver::new(p)?;
        let mut modes = field.eigenfunctions_at(&solver.nodes);
        for (k, g) in field.eigenvalues.iter().enumerate() {
            let s = params.sigma * g.sqrt();
            modes.column_mut(k).iter_mut().for_each(|v| *v *= s);
        }
        Ok(Self { field, solver, modes })
    }

    /// Benchmark model for `d` variables with `P = 128`.
    pub fn benchmark(d: usize) -> Result<Self> {
        Self::new(FieldParams::benchmark(d), 128)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    /// `a(x_i, z)` on the collocation nodes.
    pub fn diffusivity(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        let zv = DVector::from_column_slice(z);
        let log_a = &self.modes * zv;
        let a: Vec<f64> = log_a.iter().map(|v| (self.field.params.mean + v).exp()).collect();
        if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::NonFinite(format!("diffusivity overflow at z = {z:?}")));
        }
        Ok(a)
    }

    /// Nodal solution `u(x_i, z)`.
    pub fn solve_sample(&self, z: &[f64]) -> Result<DVector<f64>> {
        self.solver.solve(&self.diffusivity(z)?)
    }

    /// `q(z) = u(1/2, z)`.
    pub fn qoi(&self, z: &[f64]) -> Result<f64> {
        let u = self.solve_sample(z)?;
        Ok(self.solver.interpolate(&u, 0.5))
    }

    /// `q` at every row of `points`, in parallel.
    pub fn qoi_batch(&self, points: &DMatrix<f64>) -> Result<DVector<f64>> {
        let values: Vec<f64> = (0..points.nrows())
            .into_par_iter()
            .map(|m| {
                let z: Vec<f64> = points.row(m).iter().copied().collect();
                self.qoi(&z)
            })
            .collect::<Result<_>>()?;
        Ok(DVector::from_vec(values))
    }
}

/// Held-out draws from the orthogonality density with their true QoI values.
#[derive(Debug, Clone)]
pub struct ValidationSet {
    pub points: DMatrix<f64>,
    pub values: DVector<f64>,
    pub seed: u64,
}

impl ValidationSet {
    /// `q` draws from `w` evaluated with `model`.
    pub fn new(model: &DiffusionModel, families: &[FamilyKind], q: usize, seed: u64) -> Result<Self> {
        let batch = sample_mc(families, q, seed)?;
        let values = model.qoi_batch(&batch.points)?;
        Ok(Self {
            points: batch.points,
            values,
            seed,
        })
    }

    /// Validation set for an arbitrary target function.
    pub fn from_function<F: Fn(&[f64]) -> f64 + Sync>(
        families: &[FamilyKind],
        q: usize,
        seed: u64,
        f: F,
    ) -> Result<Self> {
        let batch = sample_mc(families, q, seed)?;
        let values = DVector::from_iterator(
            q,
            (0..q).map(|m| {
                let z: Vec<f64> = batch.points.row(m).iter().copied().collect();
                f(&z)
            }),
        );
        Ok(Self {
            points: batch.points,
            values,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Design matrix of the surrogate basis at the validation points.
    pub fn design(&self, families: &[BasisFamily], set: &MultiIndexSet) -> Result<DesignMatrix> {
        DesignMatrix::from_points(families, set, &self.points)
    }

    /// `sqrt(mean |f_hat - f|^2)` using a design built by [`Self::design`].
    pub fn error_with(&self, design: &DesignMatrix, coeffs: &DVector<f64>) -> Result<f64> {
        let fitted = design.evaluate(coeffs)?;
        Ok(((fitted - &self.values).norm_squared() / self.len() as f64).sqrt())
    }
}

/// `eps_{l2(w)}` of a surrogate over `q` fresh draws from `w`.
pub fn validation_error(
    coeffs: &DVector<f64>,
    families: &[BasisFamily],
    set: &MultiIndexSet,
    model: &DiffusionModel,
    q: usize,
    seed: u64,
) -> Result<f64> {
    let kinds: Vec<FamilyKind> = families.iter().map(|f| f.kind()).collect();
    let vs = ValidationSet::new(model, &kinds, q, seed)?;
    vs.error_with(&vs.design(families, set)?, coeffs)
}
