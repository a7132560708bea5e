//! Christoffel preconditioning and weighted system assembly.
//!
//! Rows of the design matrix are stored with a per-row log-scale so that
//! samples far out on unbounded domains never overflow. Weights are kept in
//! log form for the same reason.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index_sets::MultiIndexSet;
use crate::orthopoly::{tensor_eval, BasisFamily, FamilyKind};
use crate::sampling::{SampleBatch, Strategy};

/// `Phi[m, i] = phi_i(Z_m)`, held as scaled rows times `exp(log_scale[m])`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    scaled: DMatrix<f64>,
    log_scale: Vec<f64>,
}

/// Diagonal of `W`, stored as natural logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub strategy: Strategy,
    pub log_values: Vec<f64>,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|v| v.exp()).collect()
    }

    /// Unit weights, i.e. no preconditioning.
    pub fn ones(strategy: Strategy, m: usize) -> Self {
        Self {
            strategy,
            log_values: vec![0.0; m],
        }
    }

    pub fn from_values(strategy: Strategy, values: &[f64]) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!("weight {bad} is not finite and positive")));
        }
        Ok(Self {
            strategy,
            log_values: values.iter().map(|v| v.ln()).collect(),
        })
    }
}

impl DesignMatrix {
    /// Evaluate the dictionary at every sample; rows are computed in parallel.
    pub fn build(families: &[BasisFamily], set: &MultiIndexSet, batch: &SampleBatch) -> Result<Self> {
        Self::from_points(families, set, &batch.points)
    }

    pub fn from_points(families: &[BasisFamily], set: &MultiIndexSet, points: &DMatrix<f64>) -> Result<Self> {
        if points.ncols() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: points.ncols(),
            });
        }
        let rows: Vec<_> = (0..points.nrows())
            .into_par_iter()
            .map(|m| {
                let z: Vec<f64> = points.row(m).iter().copied().collect();
                tensor_eval(families, set, &z)
            })
            .collect::<Result<_>>()?;
        let mut scaled = DMatrix::zeros(rows.len(), set.len());
        let mut log_scale = Vec::with_capacity(rows.len());
        for (m, e) in rows.into_iter().enumerate() {
            for (i, v) in e.values.iter().enumerate() {
                scaled[(m, i)] = *v;
            }
            log_scale.push(e.log_scale);
        }
        Ok(Self { scaled, log_scale })
    }

    /// Wrap an explicit matrix (log-scales zero).
    pub fn from_matrix(entries: DMatrix<f64>) -> Self {
        let m = entries.nrows();
        Self {
            scaled: entries,
            log_scale: vec![0.0; m],
        }
    }

    pub fn nrows(&self) -> usize {
        self.scaled.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.scaled.ncols()
    }

    pub fn scaled_rows(&self) -> &DMatrix<f64> {
        &self.scaled
    }

    pub fn log_scales(&self) -> &[f64] {
        &self.log_scale
    }

    /// The plain matrix `Phi`; entries may be infinite if not representable.
    pub fn entries(&self) -> DMatrix<f64> {
        let mut out = self.scaled.clone();
        for (m, ls) in self.log_scale.iter().enumerate() {
            if *ls != 0.0 {
                let f = ls.exp();
                out.row_mut(m).iter_mut().for_each(|v| *v *= f);
            }
        }
        out
    }

    /// `ln sum_i phi_i(Z_m)^2`.
    pub fn log_row_sq_norm(&self, m: usize) -> f64 {
        self.scaled.row(m).norm_squared().ln() + 2.0 * self.log_scale[m]
    }

    /// `Phi alpha`, the expansion evaluated at every sample.
    pub fn evaluate(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_coeffs(coeffs)?;
        let mut out = &self.scaled * coeffs;
        for (v, ls) in out.iter_mut().zip(&self.log_scale) {
            *v *= ls.exp();
        }
        Ok(out)
    }

    fn check_coeffs(&self, coeffs: &DVector<f64>) -> Result<()> {
        if coeffs.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }
}

/// `lambda(z) = 1 / sum_i phi_i(z)^2`.
pub fn christoffel_lambda(families: &[BasisFamily], set: &MultiIndexSet, z: &[f64]) -> Result<f64> {
    let e = tensor_eval(families, set, z)?;
    Ok((-(e.sum_squares().ln() + 2.0 * e.log_scale)).exp())
}

/// `W_mm = N lambda(Z_m)`, so every row of `sqrt(W) Phi` has norm `sqrt(N)`.
pub fn csa_weights(design: &DesignMatrix) -> Result<WeightVector> {
    let ln_n = (design.ncols() as f64).ln();
    let mut log_values = Vec::with_capacity(design.nrows());
    for m in 0..design.nrows() {
        let lr = design.log_row_sq_norm(m);
        if !lr.is_finite() {
            return Err(Error::NonFinite(format!("row {m} of the design matrix has norm {}", lr.exp())));
        }
        log_values.push(ln_n - lr);
    }
    Ok(WeightVector {
        strategy: Strategy::Csa,
        log_values,
    })
}

/// Envelope weights of the asymptotic strategies.
///
/// Bounded: `k(z) = prod_j (1 - z_j^2)^{1/2} w(z_j)`. Gaussian:
/// `k(z) = exp(-|z|^2 / 2)`. MC gets unit weights.
pub fn asymptotic_weights(strategy: Strategy, families: &[FamilyKind], batch: &SampleBatch) -> Result<WeightVector> {
    let d = batch.dim();
    if families.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: families.len(),
        });
    }
    let m = batch.len();
    match strategy {
        Strategy::Mc => Ok(WeightVector::ones(strategy, m)),
        Strategy::AsymptoticBounded => {
            if let Some(k) = families.iter().find(|k| !k.is_bounded()) {
                return Err(Error::UnsupportedFamily(format!(
                    "asymptotic bounded weights need bounded families, got {k:?}"
                )));
            }
            let mut log_values = Vec::with_capacity(m);
            for row in 0..m {
                let mut acc = 0.0;
                for (j, kind) in families.iter().enumerate() {
                    let z = batch.points[(row, j)];
                    kind.check_domain(z)?;
                    acc += 0.5 * (1.0 - z * z).ln() + kind.density(z).ln();
                }
                log_values.push(acc);
            }
            Ok(WeightVector { strategy, log_values })
        }
        Strategy::AsymptoticGaussian => {
            if families.iter().any(|k| *k != FamilyKind::Hermite) {
                return Err(Error::UnsupportedFamily(
                    "asymptotic Gaussian weights need Hermite families".into(),
                ));
            }
            let log_values = (0..m).map(|row| -0.5 * batch.points.row(row).norm_squared()).collect();
            Ok(WeightVector { strategy, log_values })
        }
        Strategy::Csa => Err(Error::InvalidParameter(
            "CSA weights come from csa_weights, not the asymptotic envelopes".into(),
        )),
    }
}

/// `A = sqrt(W) Phi` and `b = sqrt(W) f` for data `f` given at the samples.
pub fn assemble_system(
    design: &DesignMatrix,
    weights: &WeightVector,
    f: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if f.len() != design.nrows() {
        return Err(Error::DimensionMismatch {
            expected: design.nrows(),
            got: f.len(),
        });
    }
    let a = preconditioned_matrix(design, weights)?;
    let mut b = f.clone();
    for (v, lw) in b.iter_mut().zip(&weights.log_values) {
        *v *= (0.5 * lw).exp();
    }
    Ok((a, b))
}

/// `A = sqrt(W) Phi` and `b = sqrt(W) Phi alpha`, with the scale of each row
/// folded in before the product so unbounded samples stay finite.
pub fn assemble_expansion(
    design: &DesignMatrix,
    weights: &WeightVector,
    coeffs: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    design.check_coeffs(coeffs)?;
    let a = preconditioned_matrix(design, weights)?;
    let b = &a * coeffs;
    Ok((a, b))
}

/// `sqrt(W) Phi` alone.
pub fn preconditioned_matrix(design: &DesignMatrix, weights: &WeightVector) -> Result<DMatrix<f64>> {
    if weights.len() != design.nrows() {
        return Err(Error::DimensionMismatch {
            expected: design.nrows(),
            got: weights.len(),
        });
    }
    let mut a = design.scaled.clone();
    for m in 0..a.nrows() {
        let factor = if weights.strategy == Strategy::Csa {
            // exact row normalisation, independent of the stored scale
            let n = design.ncols() as f64;
            (n / design.scaled.row(m).norm_squared()).sqrt()
        } else {
            (0.5 * weights.log_values[m] + design.log_scale[m]).exp()
        };
        if !factor.is_finite() {
            return Err(Error::NonFinite(format!("row factor {factor} at sample {m}")));
        }
        a.row_mut(m).iter_mut().for_each(|v| *v *= factor);
    }
    Ok(a)
}
