//! Basis pursuit and basis pursuit denoising by LARS-LASSO homotopy.
//!
//! The homotopy follows the LASSO path `min 1/2 |A x - b|^2 + lambda |x|_1`
//! from `lambda = max |A^T b|` down to zero and stops at the first point whose
//! residual meets the tolerance. Columns are used as given.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Correlations below this are treated as zero.
pub const CORRELATION_TOL: f64 = 1e-10;

/// Largest tolerated condition number of a coordinate transform.
pub const MAX_TRANSFORM_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryProblem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub epsilon: f64,
    /// Homotopy step limit; `None` means `10 min(M, N)`.
    pub max_steps: Option<usize>,
    /// Active-set size limit; `None` means `min(M, N)`.
    pub max_active: Option<usize>,
}

impl RecoveryProblem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, epsilon: f64) -> Result<Self> {
        let p = Self {
            a,
            b,
            epsilon,
            max_steps: None,
            max_active: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.a.shape();
        if m == 0 || n == 0 {
            return Err(Error::InvalidParameter("empty system matrix".into()));
        }
        if self.b.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: self.b.len(),
            });
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon = {} must be finite and >= 0", self.epsilon)));
        }
        if self.a.iter().chain(self.b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("system contains non-finite entries".into()));
        }
        if let Some(j) = (0..n).find(|&j| self.a.column(j).norm_squared() == 0.0) {
            return Err(Error::InvalidParameter(format!("column {j} is zero")));
        }
        Ok(())
    }

    fn step_limit(&self) -> usize {
        let (m, n) = self.a.shape();
        self.max_steps.unwrap_or(10 * m.min(n))
    }

    fn active_limit(&self) -> usize {
        let (m, n) = self.a.shape();
        self.max_active.unwrap_or(m.min(n)).min(m.min(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    StepLimit,
    /// The equiangular system became singular; the last valid iterate is kept.
    Degenerate,
    /// Correlations vanished with the residual still above the tolerance.
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub coefficients: DVector<f64>,
    pub residual_norm: f64,
    pub steps: usize,
    pub status: SolverStatus,
    /// Penalty level `lambda` (maximum absolute correlation) at the end point.
    pub lambda: f64,
}

impl RecoveryResult {
    pub fn support_size(&self) -> usize {
        self.coefficients.iter().filter(|v| **v != 0.0).count()
    }
}

/// One breakpoint of the homotopy.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    /// Active columns in insertion order.
    pub active: Vec<usize>,
    /// Coefficients of the active columns, aligned with `active`.
    pub values: Vec<f64>,
    pub residual_norm: f64,
    pub lambda: f64,
}

impl PathPoint {
    pub fn dense(&self, n: usize) -> DVector<f64> {
        let mut x = DVector::zeros(n);
        for (&j, &v) in self.active.iter().zip(&self.values) {
            x[j] = v;
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    /// Breakpoints, starting with the zero vector.
    pub points: Vec<PathPoint>,
    pub result: RecoveryResult,
}

impl LassoPath {
    /// The point on the piecewise-linear path where the residual first drops
    /// to `eps`. Falls back to the final iterate if it never does.
    pub fn solution_at(&self, a: &DMatrix<f64>, b: &DVector<f64>, eps: f64) -> DVector<f64> {
        let n = a.ncols();
        let first = match self.points.iter().position(|p| p.residual_norm <= eps) {
            Some(0) => return self.points[0].dense(n),
            Some(i) => i,
            None => return self.result.coefficients.clone(),
        };
        let x0 = self.points[first - 1].dense(n);
        let x1 = self.points[first].dense(n);
        let r0 = b - a * &x0;
        let r1 = b - a * &x1;
        let dr = &r1 - &r0;
        let t = smallest_root(dr.norm_squared(), 2.0 * r0.dot(&dr), r0.norm_squared() - eps * eps)
            .unwrap_or(1.0)
            .clamp(0.0, 1.0);
        &x0 + (&x1 - &x0) * t
    }
}

/// Smallest root in `[0, inf)` of `q t^2 + l t + c`, assuming `c > 0` and the
/// quadratic decreases from `t = 0`.
fn smallest_root(q: f64, l: f64, c: f64) -> Option<f64> {
    if c <= 0.0 {
        return Some(0.0);
    }
    if q <= 0.0 {
        return if l < 0.0 { Some(-c / l) } else { None };
    }
    let disc = l * l - 4.0 * q * c;
    if disc < 0.0 {
        return None;
    }
    // numerically stable form of (-l - sqrt(disc)) / 2q
    let s = disc.sqrt();
    let t = if l < 0.0 { 2.0 * c / (-l + s) } else { (-l - s) / (2.0 * q) };
    (t >= 0.0).then_some(t)
}

/// Lower Cholesky factor of `A_S^T A_S` with column insertion and deletion.
struct ActiveFactor {
    l: DMatrix<f64>,
    k: usize,
}

impl ActiveFactor {
    fn new(cap: usize) -> Self {
        Self {
            l: DMatrix::zeros(cap, cap),
            k: 0,
        }
    }

    /// Append a column given its cross products with the active columns and
    /// its squared norm. Fails if it is (numerically) in their span.
    fn push(&mut self, cross: &[f64], norm2: f64) -> bool {
        let k = self.k;
        let mut w = DVector::from_column_slice(cross);
        if k > 0 && !self.l.view((0, 0), (k, k)).solve_lower_triangular_mut(&mut w) {
            return false;
        }
        let d2 = norm2 - w.norm_squared();
        if !(d2 > 1e-12 * norm2) {
            return false;
        }
        for (j, v) in w.iter().enumerate() {
            self.l[(k, j)] = *v;
        }
        self.l[(k, k)] = d2.sqrt();
        self.k += 1;
        true
    }

    /// Delete position `p`, restoring triangular form with Givens rotations.
    fn remove(&mut self, p: usize) {
        let k = self.k;
        for i in p..k - 1 {
            for j in 0..=i + 1 {
                self.l[(i, j)] = self.l[(i + 1, j)];
            }
        }
        for j in 0..k {
            self.l[(k - 1, j)] = 0.0;
        }
        // rows p..k-1 now carry one entry right of the diagonal
        for i in p..k - 1 {
            let x = self.l[(i, i)];
            let y = self.l[(i, i + 1)];
            let r = x.hypot(y);
            let (c, s) = (x / r, y / r);
            for row in i..k - 1 {
                let u = self.l[(row, i)];
                let v = self.l[(row, i + 1)];
                self.l[(row, i)] = c * u + s * v;
                self.l[(row, i + 1)] = -s * u + c * v;
            }
            if self.l[(i, i)] < 0.0 {
                for row in i..k - 1 {
                    self.l[(row, i)] = -self.l[(row, i)];
                }
            }
        }
        for row in 0..k {
            self.l[(row, k - 1)] = 0.0;
        }
        self.k -= 1;
    }

    /// Solve `L L^T x = rhs`.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.k;
        let l = self.l.view((0, 0), (k, k));
        let mut y = DVector::from_column_slice(rhs);
        l.solve_lower_triangular_mut(&mut y);
        l.tr_solve_lower_triangular_mut(&mut y);
        y.data.into()
    }
}

/// Steps between exact recomputations of the residual and correlations.
const REFRESH_EVERY: usize = 16;

fn refresh(
    a: &DMatrix<f64>,
    at: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    active: &[usize],
    r: &mut DVector<f64>,
    c: &mut DVector<f64>,
) {
    r.copy_from(b);
    for &j in active {
        r.axpy(-x[j], &a.column(j), 1.0);
    }
    at.mul_to(r, c);
}

/// Run the LARS-LASSO homotopy and keep every breakpoint.
pub fn lars_lasso_path(problem: &RecoveryProblem) -> Result<LassoPath> {
    problem.validate()?;
    let a = &problem.a;
    let b = &problem.b;
    let (m, n) = a.shape();
    let eps = problem.epsilon;
    let slack = 1e-10 * (1.0 + b.norm());
    let max_active = problem.active_limit();
    let max_steps = problem.step_limit();

    let col_norm2: Vec<f64> = (0..n).map(|j| a.column(j).norm_squared()).collect();
    let mut x = DVector::<f64>::zeros(n);
    let mut active: Vec<usize> = Vec::new();
    let mut is_active = vec![false; n];
    let mut factor = ActiveFactor::new(max_active + 1);
    let mut r = b.clone();
    // row-major copy so that A^T v is a sequence of contiguous axpys
    let at = a.transpose();
    let mut c = &at * &r;
    let mut lambda = c.amax();
    let mut points = vec![PathPoint {
        active: vec![],
        values: vec![],
        residual_norm: r.norm(),
        lambda,
    }];
    let mut steps = 0;
    let mut blocked: Option<usize> = None;

    let status = loop {
        let res = r.norm();
        if res <= eps + slack {
            break SolverStatus::Converged;
        }
        if lambda <= CORRELATION_TOL {
            break SolverStatus::Infeasible;
        }
        if steps >= max_steps {
            break SolverStatus::StepLimit;
        }

        // variables whose correlation ties the maximum enter, lowest index first
        let join_tol = CORRELATION_TOL * lambda.max(1.0);
        let mut degenerate = false;
        for j in 0..n {
            if active.len() >= max_active {
                break;
            }
            if is_active[j] || Some(j) == blocked || c[j].abs() < lambda - join_tol {
                continue;
            }
            let cross: Vec<f64> = active.iter().map(|&i| a.column(i).dot(&a.column(j))).collect();
            if !factor.push(&cross, col_norm2[j]) {
                degenerate = true;
                break;
            }
            active.push(j);
            is_active[j] = true;
        }
        if degenerate {
            break SolverStatus::Degenerate;
        }
        if active.is_empty() {
            break SolverStatus::Infeasible;
        }

        // equiangular direction, driven by the current active correlations so
        // that small drifts from the common value are corrected on the step
        let rhs: Vec<f64> = active.iter().map(|&j| c[j] / lambda).collect();
        let dir = factor.solve(&rhs);
        let mut u = DVector::<f64>::zeros(m);
        for (&j, &dj) in active.iter().zip(&dir) {
            u.axpy(dj, &a.column(j), 1.0);
        }
        let au = &at * &u;

        let mut gamma = lambda;
        if active.len() < max_active {
            for j in 0..n {
                if is_active[j] {
                    continue;
                }
                // a column dropped on the last step may not re-enter immediately
                let floor = if Some(j) == blocked { join_tol } else { 0.0 };
                for g in [(lambda - c[j]) / (1.0 - au[j]), (lambda + c[j]) / (1.0 + au[j])] {
                    if g > floor && g < gamma {
                        gamma = g;
                    }
                }
            }
        }
        let mut drop: Option<usize> = None;
        for (p, (&j, &dj)) in active.iter().zip(&dir).enumerate() {
            if x[j] != 0.0 {
                let g = -x[j] / dj;
                if g > 0.0 && g < gamma {
                    gamma = g;
                    drop = Some(p);
                }
            }
        }

        // stop inside the segment if the residual tolerance is reached there
        let rr = r.norm_squared();
        let ru = r.dot(&u);
        let uu = u.norm_squared();
        let end_res2 = rr - 2.0 * gamma * ru + gamma * gamma * uu;
        let mut reached = false;
        if eps > 0.0 && end_res2 <= eps * eps {
            if let Some(t) = smallest_root(uu, -2.0 * ru, rr - eps * eps) {
                if t <= gamma {
                    gamma = t;
                    drop = None;
                    reached = true;
                }
            }
        }

        for (&j, &dj) in active.iter().zip(&dir) {
            x[j] += gamma * dj;
        }
        blocked = None;
        let dropped = drop.is_some();
        if let Some(p) = drop {
            let j = active[p];
            x[j] = 0.0;
            factor.remove(p);
            active.remove(p);
            is_active[j] = false;
            blocked = Some(j);
        }
        steps += 1;

        if steps % REFRESH_EVERY == 0 || reached || dropped {
            refresh(a, &at, b, &x, &active, &mut r, &mut c);
        } else {
            r.axpy(-gamma, &u, 1.0);
            c.axpy(-gamma, &au, 1.0);
        }
        lambda = c.amax();
        points.push(PathPoint {
            active: active.clone(),
            values: active.iter().map(|&j| x[j]).collect(),
            residual_norm: r.norm(),
            lambda,
        });
        if reached {
            break SolverStatus::Converged;
        }
    };

    refresh(a, &at, b, &x, &active, &mut r, &mut c);
    lambda = c.amax();
    let residual_norm = r.norm();
    let status = match status {
        SolverStatus::Infeasible | SolverStatus::StepLimit if residual_norm <= eps + slack => SolverStatus::Converged,
        s => s,
    };
    Ok(LassoPath {
        points,
        result: RecoveryResult {
            coefficients: x,
            residual_norm,
            steps,
            status,
            lambda,
        },
    })
}

/// `min |x|_1` subject to `|A x - b|_2 <= epsilon`; `epsilon = 0` is basis
/// pursuit.
pub fn bpdn(problem: &RecoveryProblem) -> Result<RecoveryResult> {
    Ok(lars_lasso_path(problem)?.result)
}

/// `min |T x|_1` subject to `|A x - b|_2 <= epsilon` for symmetric positive
/// definite `T`, solved in the variables `beta = T x`.
pub fn bpdn_transformed(problem: &RecoveryProblem, t: &DMatrix<f64>) -> Result<RecoveryResult> {
    problem.validate()?;
    let n = problem.a.ncols();
    if t.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: t.nrows(),
        });
    }
    let eig = t.clone().symmetric_eigen();
    let hi = eig.eigenvalues.max();
    let lo = eig.eigenvalues.min();
    if !(lo > 0.0) || hi / lo > MAX_TRANSFORM_CONDITION {
        return Err(Error::IllConditioned(if lo > 0.0 { hi / lo } else { f64::INFINITY }));
    }
    let chol = t
        .clone()
        .cholesky()
        .ok_or_else(|| Error::LinearAlgebra("transform is not positive definite".into()))?;
    // A T^{-1} = (T^{-1} A^T)^T since T is symmetric
    let at = chol.solve(&problem.a.transpose()).transpose();
    let inner = RecoveryProblem {
        a: at,
        b: problem.b.clone(),
        epsilon: problem.epsilon,
        max_steps: problem.max_steps,
        max_active: problem.max_active,
    };
    let mut result = bpdn(&inner)?;
    result.coefficients = chol.solve(&result.coefficients);
    Ok(result)
}
