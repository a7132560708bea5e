//! Surrogate error against sample count on the diffusion benchmark.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quantile, row_norm_deviation, sampled_design, Basis};
use crate::error::{Error, Result};
use crate::l1_solver::{bpdn, lars_lasso_path, RecoveryProblem, SolverStatus};
use crate::orthopoly::FamilyKind;
use crate::pde_benchmark::{DiffusionModel, FieldParams, ValidationSet};
use crate::preconditioner::assemble_system;
use crate::rng::{derive_seed, derived_stream};
use crate::sampling::Strategy;

/// Function whose expansion is recovered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyTarget {
    /// `u(1/2, z)` of the diffusion benchmark.
    Diffusion,
    /// `1 + sum_k z_k / (k + 1) + z_1^2 / 2 + z_1 z_d / 4`, exactly representable.
    Quadratic,
}

impl StudyTarget {
    pub fn quadratic(z: &[f64]) -> f64 {
        let lin: f64 = z.iter().enumerate().map(|(k, v)| v / (k + 2) as f64).sum();
        let d = z.len();
        1.0 + lin + 0.5 * z[0] * z[0] + 0.25 * z[0] * z[d - 1]
    }
}

fn default_tolerances() -> Vec<f64> {
    (2..=20).map(|k| 10f64.powf(-(k as f64) / 2.0)).collect()
}

fn default_folds() -> usize {
    5
}

fn default_validation() -> usize {
    10_000
}

fn default_collocation() -> usize {
    128
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub family: FamilyKind,
    pub degree: usize,
    pub strategies: Vec<Strategy>,
    pub m_values: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub field: FieldParams,
    #[serde(default = "default_collocation")]
    pub collocation_points: usize,
    #[serde(default = "default_validation")]
    pub validation_size: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Candidate tolerances relative to `|b|`, tried by cross-validation.
    #[serde(default = "default_tolerances")]
    pub tolerances: Vec<f64>,
    #[serde(default = "default_target")]
    pub target: StudyTarget,
    pub seed: u64,
}

fn default_target() -> StudyTarget {
    StudyTarget::Diffusion
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::LEGENDRE,
            degree: 30,
            strategies: vec![Strategy::Csa, Strategy::Mc],
            m_values: vec![50, 100, 150, 200, 300],
            trials: 20,
            field: FieldParams::default(),
            collocation_points: default_collocation(),
            validation_size: default_validation(),
            folds: default_folds(),
            tolerances: default_tolerances(),
            target: StudyTarget::Diffusion,
            seed: 0,
        }
    }
}

impl PdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.m_values.is_empty() || self.strategies.is_empty() {
            return Err(Error::InvalidParameter("trials, m_values and strategies must be non-empty".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter("cross-validation needs at least 2 folds".into()));
        }
        if let Some(m) = self.m_values.iter().find(|m| **m < 2 * self.folds) {
            return Err(Error::InvalidParameter(format!(
                "M = {m} is too small for {}-fold cross-validation",
                self.folds
            )));
        }
        if self.tolerances.is_empty() || self.tolerances.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter("tolerances must be positive and finite".into()));
        }
        if self.validation_size == 0 {
            return Err(Error::InvalidParameter("validation_size must be positive".into()));
        }
        Ok(())
    }
}

/// Select a relative tolerance by `k`-fold cross-validation.
///
/// For each fold the homotopy is run once on the training rows down to the
/// smallest candidate; every candidate is read off that path and scored by
/// the squared residual on the held-out rows. Ties go to the larger
/// tolerance.
pub fn cross_validate_tolerance(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tolerances: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let m = a.nrows();
    if folds < 2 || m < 2 * folds {
        return Err(Error::InvalidParameter(format!("{folds}-fold split of {m} rows")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut derived_stream(seed, &[]));
    let mut cands = tolerances.to_vec();
    cands.sort_by(|x, y| y.total_cmp(x));
    let smallest = *cands.last().unwrap();
    let mut scores = vec![0.0; cands.len()];
    for k in 0..folds {
        let test: Vec<usize> = order.iter().copied().skip(k).step_by(folds).collect();
        let mut is_test = vec![false; m];
        test.iter().for_each(|&i| is_test[i] = true);
        let train: Vec<usize> = (0..m).filter(|&i| !is_test[i]).collect();
        let a_tr = a.select_rows(&train);
        let b_tr = b.select_rows(&train);
        let a_te = a.select_rows(&test);
        let b_te = b.select_rows(&test);
        let scale = b_tr.norm();
        let path = lars_lasso_path(&RecoveryProblem::new(a_tr.clone(), b_tr.clone(), smallest * scale)?)?;
        for (score, tau) in scores.iter_mut().zip(&cands) {
            let x = path.solution_at(&a_tr, &b_tr, tau * scale);
            *score += (&a_te * x - &b_te).norm_squared();
        }
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(cands[best])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub m: usize,
    pub trial: usize,
    pub tolerance: f64,
    pub epsilon: f64,
    pub error: f64,
    pub status: SolverStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub strategy: Strategy,
    pub n_terms: usize,
    pub points: Vec<CurvePoint>,
    pub records: Vec<TrialRecord>,
    pub max_row_norm_deviation: Option<f64>,
}

impl ConvergenceCurve {
    pub fn median_at(&self, m: usize) -> Option<f64> {
        self.points.iter().find(|p| p.m == m).map(|p| p.median)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m,median,q1,q3,trials")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{},{}", p.m, p.median, p.q1, p.q3, p.trials)?;
        }
        Ok(())
    }

    /// Per-trial errors with the cross-validated tolerance and `epsilon`.
    pub fn write_trials_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m,trial,tolerance,epsilon,error,status")?;
        for r in &self.records {
            let status = serde_json::to_value(r.status)?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.m,
                r.trial,
                r.tolerance,
                r.epsilon,
                r.error,
                status.as_str().unwrap_or_default()
            )?;
        }
        Ok(())
    }
}

/// Shared pieces of a study: basis, forward model and validation data.
pub struct StudySetup {
    pub basis: Basis,
    pub model: Option<DiffusionModel>,
    pub validation: ValidationSet,
    pub validation_design: crate::preconditioner::DesignMatrix,
}

impl StudySetup {
    pub fn new(config: &PdeConfig) -> Result<Self> {
        config.validate()?;
        let d = config.field.d;
        let basis = Basis::isotropic(config.family, d, config.degree)?;
        let vseed = derive_seed(config.seed, &[u64::MAX]);
        let (model, validation) = match config.target {
            StudyTarget::Diffusion => {
                let model = DiffusionModel::new(config.field, config.collocation_points)?;
                let vs = ValidationSet::new(&model, &basis.kinds, config.validation_size, vseed)?;
                (Some(model), vs)
            }
            StudyTarget::Quadratic => {
                let vs = ValidationSet::from_function(&basis.kinds, config.validation_size, vseed, StudyTarget::quadratic)?;
                (None, vs)
            }
        };
        let validation_design = validation.design(&basis.families, &basis.set)?;
        Ok(Self {
            basis,
            model,
            validation,
            validation_design,
        })
    }

    fn target(&self, points: &DMatrix<f64>) -> Result<DVector<f64>> {
        match &self.model {
            Some(model) => model.qoi_batch(points),
            None => Ok(DVector::from_iterator(
                points.nrows(),
                (0..points.nrows()).map(|m| {
                    let z: Vec<f64> = points.row(m).iter().copied().collect();
                    StudyTarget::quadratic(&z)
                }),
            )),
        }
    }
}

struct TrialResult {
    record: TrialRecord,
    deviation: Option<f64>,
}

fn run_trial(setup: &StudySetup, config: &PdeConfig, strategy: Strategy, mi: usize, t: usize) -> Result<TrialResult> {
    let m = config.m_values[mi];
    let seed = derive_seed(config.seed, &[mi as u64, t as u64]);
    let sd = sampled_design(&setup.basis, strategy, m, derive_seed(seed, &[0]))?;
    let f = setup.target(&sd.batch.points)?;
    let (a, b) = assemble_system(&sd.design, &sd.weights, &f)?;
    let deviation = (strategy == Strategy::Csa).then(|| row_norm_deviation(&a));
    let tolerance = cross_validate_tolerance(&a, &b, &config.tolerances, config.folds, derive_seed(seed, &[1]))?;
    let epsilon = tolerance * b.norm();
    let result = bpdn(&RecoveryProblem::new(a, b, epsilon)?)?;
    let error = setup.validation.error_with(&setup.validation_design, &result.coefficients)?;
    Ok(TrialResult {
        record: TrialRecord {
            m,
            trial: t,
            tolerance,
            epsilon,
            error,
            status: result.status,
        },
        deviation,
    })
}

/// Error curve for one strategy over a prepared setup.
pub fn convergence_curve(setup: &StudySetup, config: &PdeConfig, strategy: Strategy) -> Result<ConvergenceCurve> {
    let jobs: Vec<(usize, usize)> = (0..config.m_values.len())
        .flat_map(|mi| (0..config.trials).map(move |t| (mi, t)))
        .collect();
    let results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(mi, t)| run_trial(setup, config, strategy, mi, t))
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(config.m_values.len());
    for &m in &config.m_values {
        let mut errs: Vec<f64> = results.iter().filter(|r| r.record.m == m).map(|r| r.record.error).collect();
        errs.sort_by(f64::total_cmp);
        points.push(CurvePoint {
            m,
            median: quantile(&errs, 0.5),
            q1: quantile(&errs, 0.25),
            q3: quantile(&errs, 0.75),
            trials: errs.len(),
        });
    }
    let max_row_norm_deviation = results
        .iter()
        .filter_map(|r| r.deviation)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    Ok(ConvergenceCurve {
        strategy,
        n_terms: setup.basis.len(),
        points,
        records: results.into_iter().map(|r| r.record).collect(),
        max_row_norm_deviation,
    })
}

/// One curve per configured strategy, sharing the validation set.
pub fn pde_study(config: &PdeConfig) -> Result<Vec<ConvergenceCurve>> {
    let setup = StudySetup::new(config)?;
    config
        .strategies
        .iter()
        .map(|&s| convergence_curve(&setup, config, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preconditioner::DesignMatrix;

    #[test]
    fn cv_prefers_small_tolerance_for_exact_data() {
        let a = DMatrix::from_fn(40, 12, |i, j| ((i * 7 + j * 3) as f64).sin());
        let mut x = DVector::zeros(12);
        x[2] = 1.5;
        x[7] = -0.5;
        let b = &a * &x;
        let tau = cross_validate_tolerance(&a, &b, &default_tolerances(), 5, 9).unwrap();
        assert!(tau <= 1e-6, "selected {tau}");
    }

    #[test]
    fn cv_rejects_tiny_systems() {
        let a = DMatrix::identity(6, 6);
        let b = DVector::from_element(6, 1.0);
        assert!(cross_validate_tolerance(&a, &b, &[0.1], 5, 0).is_err());
    }

    #[test]
    fn quadratic_target_is_recovered() {
        let config = PdeConfig {
            degree: 8,
            strategies: vec![Strategy::Csa],
            m_values: vec![34],
            trials: 5,
            validation_size: 500,
            target: StudyTarget::Quadratic,
            seed: 5,
            ..PdeConfig::default()
        };
        let curves = pde_study(&config).unwrap();
        assert_eq!(curves[0].n_terms, 45);
        assert!(curves[0].records.iter().all(|r| r.error < 1e-8), "{:?}", curves[0].records);
        assert!(curves[0].max_row_norm_deviation.unwrap() < 1e-12);
    }

    #[test]
    fn validation_error_of_zero_surrogate_is_rms() {
        let config = PdeConfig {
            degree: 3,
            validation_size: 200,
            seed: 1,
            ..PdeConfig::default()
        };
        let setup = StudySetup::new(&config).unwrap();
        let zero = DVector::zeros(setup.basis.len());
        let e = setup.validation.error_with(&setup.validation_design, &zero).unwrap();
        let rms = (setup.validation.values.norm_squared() / 200.0).sqrt();
        assert!((e - rms).abs() < 1e-15 && e > 0.0);
        let _: &DesignMatrix = &setup.validation_design;
    }
}
