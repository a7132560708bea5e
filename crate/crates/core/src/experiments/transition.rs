//! Manufactured sparse recovery and recovery-probability maps.

use std::io::Write;

use nalgebra::DVector;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{centred_ratios, row_norm_deviation, sampled_design, Basis};
use crate::error::{Error, Result};
use crate::l1_solver::{bpdn, RecoveryProblem, SolverStatus};
use crate::orthopoly::FamilyKind;
use crate::preconditioner::assemble_expansion;
use crate::rng::{derive_seed, derived_stream};
use crate::sampling::Strategy;

fn default_threshold() -> f64 {
    0.01
}

fn default_trials() -> usize {
    100
}

/// One manufactured recovery experiment, repeated `trials` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub family: FamilyKind,
    pub d: usize,
    pub n: usize,
    pub strategy: Strategy,
    pub s: usize,
    pub m: usize,
    pub seed: u64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl TrialConfig {
    pub fn validate(&self, n_terms: usize) -> Result<()> {
        if !(self.s <= self.m && self.m <= n_terms) {
            return Err(Error::InvalidParameter(format!(
                "need s <= M <= N, got s = {}, M = {}, N = {n_terms}",
                self.s, self.m
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter("M must be positive".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidParameter("success threshold must be positive".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidParameter("epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    /// `|alpha - alpha_hat| / |alpha|`, or the absolute error when `alpha = 0`.
    pub relative_error: f64,
    pub status: SolverStatus,
    /// Set whenever the solver did not report convergence.
    pub flagged: bool,
    /// Row-norm deviation of the preconditioned matrix (CSA only).
    pub row_norm_deviation: Option<f64>,
}

/// Plant an `s`-sparse expansion with standard normal coefficients, sample
/// it with the configured strategy and recover it by basis pursuit.
pub fn manufactured_trial(config: &TrialConfig, trial_id: u64) -> Result<TrialOutcome> {
    let basis = Basis::isotropic(config.family, config.d, config.n)?;
    run_trial(&basis, config, derive_seed(config.seed, &[trial_id]))
}

pub(crate) fn run_trial(basis: &Basis, config: &TrialConfig, seed: u64) -> Result<TrialOutcome> {
    let n_terms = basis.len();
    config.validate(n_terms)?;

    let mut rng = derived_stream(seed, &[1]);
    let mut alpha = DVector::zeros(n_terms);
    for j in sample_indices(&mut rng, n_terms, config.s).into_iter() {
        alpha[j] = rng.sample(StandardNormal);
    }

    let sd = sampled_design(basis, config.strategy, config.m, derive_seed(seed, &[0]))?;
    let (a, b) = assemble_expansion(&sd.design, &sd.weights, &alpha)?;
    let deviation = (config.strategy == Strategy::Csa).then(|| row_norm_deviation(&a));
    let result = bpdn(&RecoveryProblem::new(a, b, config.epsilon)?)?;

    let err = (&result.coefficients - &alpha).norm();
    let scale = alpha.norm();
    let relative_error = if scale > 0.0 { err / scale } else { err };
    let degenerate = result.status == SolverStatus::Degenerate;
    Ok(TrialOutcome {
        success: !degenerate && relative_error <= config.threshold,
        relative_error,
        status: result.status,
        flagged: result.status != SolverStatus::Converged,
        row_norm_deviation: deviation,
    })
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::Csa, Strategy::Mc]
}

fn default_ratios() -> Vec<f64> {
    centred_ratios(20)
}

/// Grid of `(M/N, s/M)` cells swept for each strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub family: FamilyKind,
    pub d: usize,
    pub n: usize,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_ratios")]
    pub m_ratios: Vec<f64>,
    #[serde(default = "default_ratios")]
    pub s_ratios: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::LEGENDRE,
            d: 2,
            n: 30,
            strategies: default_strategies(),
            m_ratios: default_ratios(),
            s_ratios: default_ratios(),
            trials: 20,
            threshold: default_threshold(),
            epsilon: 0.0,
            seed: 0,
        }
    }
}

/// One planned cell: ratios, sample count, sparsity and trial count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellPlan {
    pub m_ratio: f64,
    pub s_ratio: f64,
    pub m: usize,
    pub s: usize,
    pub trials: usize,
}

impl TransitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be positive".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidParameter("no strategies given".into()));
        }
        for r in self.m_ratios.iter().chain(&self.s_ratios) {
            if !(*r > 0.0 && *r <= 1.0) {
                return Err(Error::InvalidParameter(format!("ratio {r} outside (0, 1]")));
            }
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidParameter("success threshold must be positive".into()));
        }
        Ok(())
    }

    /// Cells in row-major `(M/N, s/M)` order.
    pub fn plan(&self) -> Result<Vec<CellPlan>> {
        self.validate()?;
        let n_terms = crate::index_sets::total_degree_cardinality(self.d, self.n)?;
        let mut cells = Vec::with_capacity(self.m_ratios.len() * self.s_ratios.len());
        for &mr in &self.m_ratios {
            let m = ((mr * n_terms as f64).round() as usize).clamp(1, n_terms);
            for &sr in &self.s_ratios {
                let s = ((sr * m as f64).round() as usize).clamp(1, m);
                cells.push(CellPlan {
                    m_ratio: mr,
                    s_ratio: sr,
                    m,
                    s,
                    trials: self.trials,
                });
            }
        }
        Ok(cells)
    }

    pub fn write_plan_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m_over_n,s_over_m,m,s,trials")?;
        for c in self.plan()? {
            writeln!(out, "{},{},{},{},{}", c.m_ratio, c.s_ratio, c.m, c.s, c.trials)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionCell {
    pub plan: CellPlan,
    pub successes: usize,
    pub flagged: usize,
}

impl TransitionCell {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.plan.trials as f64
    }

    /// Binomial standard error of [`Self::rate`].
    pub fn std_error(&self) -> f64 {
        let p = self.rate();
        (p * (1.0 - p) / self.plan.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionGrid {
    pub strategy: Strategy,
    pub n_terms: usize,
    pub cells: Vec<TransitionCell>,
    /// Largest preconditioned row-norm deviation seen (CSA only).
    pub max_row_norm_deviation: Option<f64>,
}

impl TransitionGrid {
    pub fn mean_rate(&self) -> f64 {
        self.cells.iter().map(|c| c.rate()).sum::<f64>() / self.cells.len() as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m_over_n,s_over_m,m,s,trials,successes,success_rate,std_error,flagged")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.plan.m_ratio,
                c.plan.s_ratio,
                c.plan.m,
                c.plan.s,
                c.plan.trials,
                c.successes,
                c.rate(),
                c.std_error(),
                c.flagged
            )?;
        }
        Ok(())
    }
}

/// Sweep every cell for one strategy. Trial `t` of cell `(i, j)` uses the
/// stream `hash(seed, i, j, t)`, shared across strategies.
pub fn transition_grid(config: &TransitionConfig, strategy: Strategy) -> Result<TransitionGrid> {
    let plan = config.plan()?;
    let basis = Basis::isotropic(config.family, config.d, config.n)?;
    let cols = config.s_ratios.len();
    let jobs: Vec<(usize, usize)> = (0..plan.len())
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let cell = &plan[c];
            let trial = TrialConfig {
                family: config.family,
                d: config.d,
                n: config.n,
                strategy,
                s: cell.s,
                m: cell.m,
                seed: config.seed,
                epsilon: config.epsilon,
                threshold: config.threshold,
                trials: config.trials,
            };
            let seed = derive_seed(config.seed, &[(c / cols) as u64, (c % cols) as u64, t as u64]);
            run_trial(&basis, &trial, seed)
        })
        .collect::<Result<_>>()?;

    let mut cells: Vec<TransitionCell> = plan
        .iter()
        .map(|p| TransitionCell {
            plan: *p,
            successes: 0,
            flagged: 0,
        })
        .collect();
    let mut max_dev: Option<f64> = None;
    for (&(c, _), o) in jobs.iter().zip(&outcomes) {
        cells[c].successes += o.success as usize;
        cells[c].flagged += o.flagged as usize;
        if let Some(dev) = o.row_norm_deviation {
            max_dev = Some(max_dev.map_or(dev, |m| m.max(dev)));
        }
    }
    Ok(TransitionGrid {
        strategy,
        n_terms: basis.len(),
        cells,
        max_row_norm_deviation: max_dev,
    })
}

/// One grid per configured strategy, in config order.
pub fn transition_study(config: &TransitionConfig) -> Result<Vec<TransitionGrid>> {
    config
        .strategies
        .iter()
        .map(|&s| transition_grid(config, s))
        .collect()
}
