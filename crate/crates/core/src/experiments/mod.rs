//! Recovery experiments: manufactured sparse-recovery transition studies and
//! convergence studies on the diffusion benchmark, plus run provenance.
//!
//! Every study is a pure function of its config. Per-cell and per-trial
//! streams are derived from the master seed, so outputs do not depend on
//! the number of worker threads.

pub mod convergence;
pub mod provenance;
pub mod runner;
pub mod transition;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::index_sets::MultiIndexSet;
use crate::orthopoly::{BasisFamily, FamilyKind};
use crate::preconditioner::{asymptotic_weights, csa_weights, DesignMatrix, WeightVector};
use crate::sampling::{SampleBatch, SamplerSpec, Strategy};

pub use convergence::{
    cross_validate_tolerance, pde_study, ConvergenceCurve, CurvePoint, PdeConfig, StudyTarget,
};
pub use provenance::{config_hash, Provenance};
pub use transition::{
    manufactured_trial, transition_study, TransitionCell, TransitionConfig, TransitionGrid, TrialConfig,
    TrialOutcome,
};

/// Basis families and total-degree set shared by all trials of a study.
#[derive(Debug, Clone)]
pub struct Basis {
    pub kinds: Vec<FamilyKind>,
    pub families: Vec<BasisFamily>,
    pub set: MultiIndexSet,
    pub degree: usize,
}

impl Basis {
    /// Same family in every coordinate, total degree `n`.
    pub fn isotropic(kind: FamilyKind, d: usize, n: usize) -> Result<Self> {
        let family = BasisFamily::new(kind)?;
        Ok(Self {
            kinds: vec![kind; d],
            families: vec![family; d],
            set: MultiIndexSet::total_degree(d, n)?,
            degree: n,
        })
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kinds.len()
    }
}

/// Samples, design matrix and weights for one recovery system.
#[derive(Debug, Clone)]
pub struct SampledDesign {
    pub batch: SampleBatch,
    pub design: DesignMatrix,
    pub weights: WeightVector,
}

/// Draw `m` samples for `strategy` and build the matching design and weights.
pub fn sampled_design(basis: &Basis, strategy: Strategy, m: usize, seed: u64) -> Result<SampledDesign> {
    let spec = SamplerSpec::new(strategy, basis.kinds.clone(), basis.degree, seed)?;
    let batch = spec.draw(m)?;
    let design = DesignMatrix::build(&basis.families, &basis.set, &batch)?;
    let weights = match strategy {
        Strategy::Csa => csa_weights(&design)?,
        _ => asymptotic_weights(strategy, &basis.kinds, &batch)?,
    };
    Ok(SampledDesign { batch, design, weights })
}

/// Largest `| |row| - sqrt(N) | / sqrt(N)` over the rows of `a`.
pub fn row_norm_deviation(a: &DMatrix<f64>) -> f64 {
    let target = (a.ncols() as f64).sqrt();
    a.row_iter()
        .map(|r| (r.norm() - target).abs() / target)
        .fold(0.0, f64::max)
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Cell-centred ratios `(k - 1/2) / count` for `k = 1..=count`.
pub fn centred_ratios(count: usize) -> Vec<f64> {
    (1..=count).map(|k| (k as f64 - 0.5) / count as f64).collect()
}
