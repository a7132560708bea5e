//! Orthonormal polynomial families and overflow-safe evaluation.
//!
//! Every family is orthonormal with respect to its *probability* density, so
//! `phi_0 == 1`. Polynomials are generated by the three-term recurrence
//!
//! ```text
//! b_{k+1} phi_{k+1}(z) = (z - a_k) phi_k(z) - b_k phi_{k-1}(z)
//! ```
//!
//! On unbounded supports the raw values overflow long before the degrees of
//! interest, so evaluation tracks a common logarithmic scale factor instead.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};
use crate::index_sets::MultiIndexSet;

/// Default degree cap for precomputed recurrence tables.
pub const DEFAULT_DEGREE_CAP: usize = 512;

/// Values above this magnitude trigger a rescale during the recurrence.
const OVERFLOW_GUARD: f64 = 1e150;

/// Products of per-dimension maxima above this are renormalised in
/// [`tensor_eval`].
const TENSOR_GUARD: f64 = 1e280;

/// The orthogonality density, up to probability normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `(1 - z)^a (1 + z)^b` on `[-1, 1]`.
    Jacobi { a: f64, b: f64 },
    /// `exp(-z^2)` on the real line.
    Hermite,
    /// `exp(-z)` on `[0, inf)`.
    Laguerre,
}

impl FamilyKind {
    pub const LEGENDRE: FamilyKind = FamilyKind::Jacobi { a: 0.0, b: 0.0 };

    pub fn jacobi(a: f64, b: f64) -> Self {
        FamilyKind::Jacobi { a, b }
    }

    /// Short name used in CSV output, e.g. `legendre` or `jacobi(2,5)`.
    pub fn label(&self) -> String {
        match *self {
            FamilyKind::Jacobi { a, b } if a == 0.0 && b == 0.0 => "legendre".into(),
            FamilyKind::Jacobi { a, b } => format!("jacobi({a},{b})"),
            FamilyKind::Hermite => "hermite".into(),
            FamilyKind::Laguerre => "laguerre".into(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, FamilyKind::Jacobi { .. })
    }

    /// Whether the density is symmetric about the origin.
    pub fn is_symmetric(&self) -> bool {
        match *self {
            FamilyKind::Jacobi { a, b } => a == b,
            FamilyKind::Hermite => true,
            FamilyKind::Laguerre => false,
        }
    }

    pub fn contains(&self, z: f64) -> bool {
        match self {
            FamilyKind::Jacobi { .. } => (-1.0..=1.0).contains(&z),
            FamilyKind::Hermite => z.is_finite(),
            FamilyKind::Laguerre => z >= 0.0 && z.is_finite(),
        }
    }

    fn support_label(&self) -> &'static str {
        match self {
            FamilyKind::Jacobi { .. } => "[-1, 1]",
            FamilyKind::Hermite => "(-inf, inf)",
            FamilyKind::Laguerre => "[0, inf)",
        }
    }

    pub fn check_domain(&self, z: f64) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::Domain {
                z,
                support: self.support_label().to_string(),
            })
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FamilyKind::Jacobi { a, b } => {
                if !(a.is_finite() && b.is_finite()) || a < -0.5 || b < -0.5 {
                    return Err(Error::UnsupportedFamily(format!(
                        "Jacobi parameters must satisfy a, b >= -1/2 (got a = {a}, b = {b})"
                    )));
                }
                Ok(())
            }
            FamilyKind::Hermite | FamilyKind::Laguerre => Ok(()),
        }
    }

    /// Probability density of the orthogonality measure.
    pub fn density(&self, z: f64) -> f64 {
        if !self.contains(z) {
            return 0.0;
        }
        match *self {
            FamilyKind::Jacobi { a, b } => {
                let log_norm = (a + b + 1.0) * std::f64::consts::LN_2 + ln_beta(a + 1.0, b + 1.0);
                let one_minus = 1.0 - z;
                let one_plus = 1.0 + z;
                if (one_minus == 0.0 && a > 0.0) || (one_plus == 0.0 && b > 0.0) {
                    return 0.0;
                }
                (a * one_minus.ln() + b * one_plus.ln() - log_norm).exp()
            }
            FamilyKind::Hermite => (-z * z).exp() / std::f64::consts::PI.sqrt(),
            FamilyKind::Laguerre => (-z).exp(),
        }
    }

    /// Recurrence coefficients `(a_k, b_k)` for `k = 0..=n_max`, with `b_0 = 0`.
    fn coefficients(&self, n_max: usize) -> (Vec<f64>, Vec<f64>) {
        let mut diag = Vec::with_capacity(n_max + 1);
        let mut off = Vec::with_capacity(n_max + 1);
        off.push(0.0);
        match *self {
            FamilyKind::Jacobi { a, b } => {
                let ab = a + b;
                for k in 0..=n_max {
                    let kf = k as f64;
                    let ak = if k == 0 {
                        (b - a) / (ab + 2.0)
                    } else {
                        (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
                    };
                    diag.push(ak);
                    if k >= 1 {
                        let b2 = if k == 1 {
                            // closed form with the (a + b + 1) factor cancelled
                            4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
                        } else {
                            let t = 2.0 * kf + ab;
                            4.0 * kf * (kf + a) * (kf + b) * (kf + ab)
                                / (t * t * (t + 1.0) * (t - 1.0))
                        };
                        off.push(b2.sqrt());
                    }
                }
            }
            FamilyKind::Hermite => {
                for k in 0..=n_max {
                    diag.push(0.0);
                    if k >= 1 {
                        off.push((k as f64 / 2.0).sqrt());
                    }
                }
            }
            FamilyKind::Laguerre => {
                for k in 0..=n_max {
                    diag.push(2.0 * k as f64 + 1.0);
                    if k >= 1 {
                        off.push(k as f64);
                    }
                }
            }
        }
        (diag, off)
    }
}

/// An orthonormal family with its recurrence table precomputed to `n_max`.
///
/// Immutable once built; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisFamily {
    kind: FamilyKind,
    diag: Vec<f64>,
    off: Vec<f64>,
}

/// `(phi_0(z), ..., phi_n(z))` up to the common factor `exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEval {
    pub values: Vec<f64>,
    pub log_scale: f64,
}

impl WeightedEval {
    /// Sum of squared values, in the scaled units.
    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `phi_k^2 / sum_j phi_j^2` for every k; independent of the scale.
    pub fn normalized_squares(&self) -> Vec<f64> {
        let total = self.sum_squares();
        self.values.iter().map(|v| v * v / total).collect()
    }

    /// The unscaled values. Entries overflow to infinity when the true values
    /// are not representable.
    pub fn unscaled(&self) -> Vec<f64> {
        let factor = self.log_scale.exp();
        self.values.iter().map(|v| v * factor).collect()
    }
}

impl BasisFamily {
    /// Recurrence table with the default degree cap.
    pub fn new(kind: FamilyKind) -> Result<Self> {
        Self::recurrence_table(kind, DEFAULT_DEGREE_CAP)
    }

    pub fn legendre() -> Self {
        Self::new(FamilyKind::LEGENDRE).expect("Legendre is always supported")
    }

    pub fn recurrence_table(kind: FamilyKind, n_max: usize) -> Result<Self> {
        kind.validate()?;
        let (diag, off) = kind.coefficients(n_max);
        debug_assert!(off.iter().skip(1).all(|&b| b > 0.0));
        Ok(Self { kind, diag, off })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn n_max(&self) -> usize {
        self.diag.len() - 1
    }

    /// `a_k` for `k = 0..=n_max`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// `b_k` for `k = 0..=n_max` (`b_0 = 0`).
    pub fn off_diag(&self) -> &[f64] {
        &self.off
    }

    fn check_degree(&self, n: usize) -> Result<()> {
        if n > self.n_max() {
            Err(Error::DegreeCap {
                requested: n,
                cap: self.n_max(),
            })
        } else {
            Ok(())
        }
    }

    /// Evaluate `phi_0..=phi_n` at `z` with dynamic rescaling.
    pub fn eval_basis(&self, n: usize, z: f64) -> Result<WeightedEval> {
        self.check_degree(n)?;
        self.kind.check_domain(z)?;
        Ok(self.eval_unchecked(n, z))
    }

    pub(crate) fn eval_unchecked(&self, n: usize, z: f64) -> WeightedEval {
        let mut values = Vec::with_capacity(n + 1);
        values.push(1.0);
        let mut log_scale = 0.0;
        let mut prev = 0.0;
        let mut cur = 1.0;
        for k in 0..n {
            let next = ((z - self.diag[k]) * cur - self.off[k] * prev) / self.off[k + 1];
            prev = cur;
            cur = next;
            values.push(next);
            if next.abs() > OVERFLOW_GUARD {
                let inv = 1.0 / next.abs();
                for v in values.iter_mut() {
                    *v *= inv;
                }
                prev *= inv;
                cur *= inv;
                log_scale += next.abs().ln();
            }
        }
        WeightedEval { values, log_scale }
    }

    /// Plain evaluation of the single polynomial `phi_k(z)`, without rescaling.
    pub fn eval_raw(&self, k: usize, z: f64) -> Result<f64> {
        let e = self.eval_basis(k, z)?;
        Ok(e.values[k] * e.log_scale.exp())
    }
}

/// Evaluate every tensor-product basis function `phi_lambda(z)` of `set`.
///
/// The per-dimension scale factors are summed in log space; the returned
/// values share the common factor `exp(log_scale)`.
pub fn tensor_eval(
    families: &[BasisFamily],
    set: &MultiIndexSet,
    z: &[f64],
) -> Result<WeightedEval> {
    let d = set.dim();
    if z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z.len(),
        });
    }
    if families.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: families.len(),
        });
    }
    let n = set.max_degree();
    let mut per_dim = Vec::with_capacity(d);
    for (fam, &zj) in families.iter().zip(z) {
        per_dim.push(fam.eval_basis(n, zj)?);
    }
    Ok(tensor_combine(&mut per_dim, set))
}

pub(crate) fn tensor_combine(per_dim: &mut [WeightedEval], set: &MultiIndexSet) -> WeightedEval {
    let rescaled = per_dim.iter().any(|e| e.log_scale != 0.0);
    let bound: f64 = per_dim
        .iter()
        .map(|e| e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .product();
    if rescaled || !(bound < TENSOR_GUARD) {
        for e in per_dim.iter_mut() {
            let m = e.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if m > 0.0 && m != 1.0 {
                for v in e.values.iter_mut() {
                    *v /= m;
                }
                e.log_scale += m.ln();
            }
        }
    }
    let log_scale = per_dim.iter().map(|e| e.log_scale).sum();
    let values = set
        .iter()
        .map(|idx| {
            idx.iter()
                .zip(per_dim.iter())
                .map(|(&k, e)| e.values[k as usize])
                .product()
        })
        .collect();
    WeightedEval { values, log_scale }
}
