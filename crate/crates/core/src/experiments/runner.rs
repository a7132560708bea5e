//! File-level entry points behind the `csa` command line tool.
//!
//! Each command reads an optional JSON config (unknown keys are rejected),
//! writes one or more CSV files into the output directory and a provenance
//! sidecar `<command>.json` next to them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::convergence::pde_study;
use super::provenance::{config_hash, Provenance};
use super::transition::{transition_study, TransitionConfig};
use super::PdeConfig;
use crate::diagnostics::{coherence_scan, gramian, sample_count_bound, GridSpec};
use crate::error::{Error, Result};
use crate::index_sets::total_degree_cardinality;
use crate::l1_solver::{bpdn, RecoveryProblem};
use crate::orthopoly::{BasisFamily, FamilyKind};
use crate::sampling::{SamplerSpec, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sample,
    Recover,
    Transition,
    Gramian,
    Bounds,
    Pde,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Recover => "recover",
            Command::Transition => "transition",
            Command::Gramian => "gramian",
            Command::Bounds => "bounds",
            Command::Pde => "pde",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Full-scale trial counts instead of desk-scale defaults.
    pub full: bool,
    pub dry_run: bool,
}

/// Trial count used by `--full`.
pub const FULL_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub strategy: Strategy,
    pub families: Vec<FamilyKind>,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Csa,
            families: vec![FamilyKind::LEGENDRE; 2],
            n: 10,
            m: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverConfig {
    /// Row-major system matrix.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GramianConfig {
    pub family: FamilyKind,
    pub degrees: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for GramianConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::LEGENDRE,
            degrees: vec![10],
            seed: 0,
        }
    }
}

fn default_grid_density() -> usize {
    GridSpec::default().points_per_degree
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub families: Vec<FamilyKind>,
    pub degrees: Vec<usize>,
    #[serde(default = "default_grid_density")]
    pub points_per_degree: usize,
    #[serde(default = "default_true")]
    pub refine: bool,
    /// With a sparsity level, also report the sample-count bound for a
    /// univariate dictionary of `n + 1` terms.
    #[serde(default)]
    pub sparsity: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            families: vec![FamilyKind::LEGENDRE, FamilyKind::Hermite, FamilyKind::Laguerre],
            degrees: (1..=10).map(|k| 10 * k).collect(),
            points_per_degree: default_grid_density(),
            refine: true,
            sparsity: None,
            seed: 0,
        }
    }
}

/// Parse `path` as `T`, reporting the file and offending key on failure.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn config_or_default<T: DeserializeOwned + Default>(opts: &RunOptions) -> Result<T> {
    match &opts.config {
        Some(p) => load_config(p),
        None => Ok(T::default()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

struct Outputs<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir, names: Vec::new() })
    }

    fn file(&mut self, name: String) -> Result<BufWriter<File>> {
        let w = create(&self.dir.join(&name))?;
        self.names.push(name);
        Ok(w)
    }

    fn finish(self, mut prov: Provenance, command: Command) -> Result<Vec<PathBuf>> {
        let mut paths: Vec<PathBuf> = self.names.iter().map(|n| self.dir.join(n)).collect();
        prov.outputs = self.names;
        let sidecar = self.dir.join(format!("{}.json", command.name()));
        prov.write(&sidecar)?;
        paths.push(sidecar);
        Ok(paths)
    }
}

fn print_plan<T: Serialize>(out: &mut (dyn Write + Send), command: Command, config: &T, outputs: &[String]) -> Result<()> {
    let plan = serde_json::json!({
        "command": command.name(),
        "config_hash": config_hash(config)?,
        "config": config,
        "outputs": outputs,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&plan)?)?;
    Ok(())
}

/// Run `command`, returning the files written (none for a dry run).
pub fn run(command: Command, opts: &RunOptions, stdout: &mut (dyn Write + Send)) -> Result<Vec<PathBuf>> {
    match opts.threads {
        Some(0) => Err(Error::InvalidParameter("--threads must be positive".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(|| dispatch(command, opts, stdout)),
        None => dispatch(command, opts, stdout),
    }
}

fn dispatch(command: Command, opts: &RunOptions, stdout: &mut (dyn Write + Send)) -> Result<Vec<PathBuf>> {
    match command {
        Command::Sample => run_sample(opts, stdout),
        Command::Recover => run_recover(opts, stdout),
        Command::Transition => run_transition(opts, stdout),
        Command::Gramian => run_gramian(opts, stdout),
        Command::Bounds => run_bounds(opts, stdout),
        Command::Pde => run_pde(opts, stdout),
    }
}

fn run_sample(opts: &RunOptions, stdout: &mut (dyn Write + Send)) -> Result<Vec<PathBuf>> {
    let mut cfg: SampleConfig = config_or_default(opts)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let spec = SamplerSpec::new(cfg.strategy, cfg.families.clone(), cfg.n, cfg.seed)?;
    if opts.dry_run {
        print_plan(stdout, Command::Sample, &cfg, &["samples.csv".into()])?;
        return Ok(vec![]);
    }
    let batch = spec.draw(cfg.m)?;
    let mut outs = Outputs::new(&opts.out)?;
    batch.write_csv(outs.file("samples.csv".into())?)?;
    let prov = Provenance::new(Command::Sample.name(), &cfg, cfg.seed)?;
    outs.finish(prov, Command::Sample)
}

fn run_recover(opts: &RunOptions, stdout: &mut (dyn Write + Send)) -> Result<Vec<PathBuf>> {
    let path = opts
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("recover needs --config with keys a, b".into()))?;
    let mut cfg: RecoverConfig = load_config(path)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let rows = cfg.a.len();
    let cols = cfg.a.first().map_or(0, |r| r.len());
    if let Some(bad) = cfg.a.iter().position(|r| r.len() != cols) {
        return Err(Error::Config(format!("a: row {bad} has {} entries, expected {cols}", cfg.a[bad].len())));
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| cfg.a[i][j]);
    let b = DVector::from_column_slice(&cfg.b);
    let problem = RecoveryProblem::new(a, b, cfg.epsilon)?;
    if opts.dry_run {
        print_plan(stdout, Command::Recover, &cfg, &["coefficients.csv".into()])?;
        return Ok(vec![]);
    }
    let result = bpdn(&problem)?;
    let mut outs = Outputs::new(&opts.out)?;
    let mut w = outs.file("coefficients.csv".into())?;
    writeln!(w, "index,coefficient")?;
    for (i, v) in result.coefficients.iter().enumerate() {
        writeln!(w, "{i},{v:e}")?;
    }
    w.flush()?;
    let mut prov = Provenance::new(Command::Recover.name(), &cfg, cfg.seed)?;
    prov.record("status", result.status)?;
    prov.record("steps", result.steps)?;
    prov.record("residual_norm", result.residual_norm)?;
    outs.finish(prov, Command::Recover)
}

fn run_transition(opts: &RunOptions, stdout: &mut (dyn Write + Send)) -> Result<Vec<PathBuf>> {
    let mut cfg: TransitionConfig = config_or_default(opts)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if opts.full {
        cfg.trials = FULL_TRIALS;
    }
    if opts.dry_run {
        cfg.write_plan_csv(&mut *stdout)?;
        return Ok(vec![]);
    }
    let grids = transition_study(&cfg)?;
    let mut outs = Outputs::new(&opts.out)?;
    let mut prov = Provenance::new(Command::Transition.name(), &cfg, cfg.seed)?;
    for g in &grids {
        let mut w = outs.file(format!("transition_{}.csv", g.strategy.label()))?;
        g.write_csv(&mut w)?;
        w.flush()?;
        prov.record(&format!("{}_mean_success", g.strategy.label()), g.mean_rate())?;
        if let Some(dev) = g.max_row_norm_deviation {
            prov.record(&format!("{}_max_row_norm_deviation", g.strategy.label()), dev)?;
        }
    }
    prov.record("grid", format!("{} x {}", cfg.m_ratios.len(), cfg.s_ratios.len()))?;
    outs.finish(prov, Command::Transition)
}

fn run_gramian(opts: &RunOptions, stdout: &mut (dyn Write + Send)) -> Result<Vec<PathBuf>> {
    let mut cfg: GramianConfig = config_or_default(opts)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let family = BasisFamily::new(cfg.family)?;
    if opts.dry_run {
        print_plan(stdout, Command::Gramian, &cfg, &["gramian.csv".into()])?;
        return Ok(vec![]);
    }
    let mut outs = Outputs::new(&opts.out)?;
    let mut w = outs.file("gramian.csv".into())?;
    writeln!(w, "family,n,norm1_inv_sqrt,lambda_min,lambda_max,max_deviation,quad_points,converged")?;
    for &n in &cfg.degrees {
        let g = gramian(&family, n)?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            cfg.family.label(),
            n,
            g.norm1_inv_sqrt,
            g.lambda_min,
            g.lambda_max,
            g.deviation_from_identity(),
            g.quad_points_used,
            g.converged
        )?;
    }
    w.flush()?;
    let prov = Provenance::new(Command::Gramian.name(), &cfg, cfg.seed)?;
    outs.finish(prov, Command::Gramian)
}

fn run_bounds(opts: &RunOptions, stdout: &mut (dyn Write + Send)) -> Result<Vec<PathBuf>> {
    let mut cfg: BoundsConfig = config_or_default(opts)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let grid = GridSpec {
        points_per_degree: cfg.points_per_degree,
        refine: cfg.refine,
    };
    if opts.dry_run {
        print_plan(stdout, Command::Bounds, &cfg, &["coherence.csv".into()])?;
        return Ok(vec![]);
    }
    let mut outs = Outputs::new(&opts.out)?;
    let mut prov = Provenance::new(Command::Bounds.name(), &cfg, cfg.seed)?;
    let mut w = outs.file("coherence.csv".into())?;
    write!(w, "family,n,coherence,argmax")?;
    if cfg.sparsity.is_some() {
        write!(w, ",norm1_inv_sqrt,sample_bound")?;
    }
    writeln!(w)?;
    let mut exponents = serde_json::Map::new();
    for &kind in &cfg.families {
        let family = BasisFamily::new(kind)?;
        let report = coherence_scan(&family, &cfg.degrees, grid)?;
        for (i, &n) in report.degrees.iter().enumerate() {
            write!(w, "{},{},{},{}", kind.label(), n, report.l_values[i], report.maximisers[i])?;
            if let Some(s) = cfg.sparsity {
                let norm1 = gramian(&family, n)?.norm1_inv_sqrt;
                let n_terms = total_degree_cardinality(1, n)?;
                write!(w, ",{},{}", norm1, sample_count_bound(norm1, report.l_values[i], s, n_terms)?)?;
            }
            writeln!(w)?;
        }
        exponents.insert(kind.label(), serde_json::json!(report.fitted_exponent));
    }
    w.flush()?;
    prov.record("fitted_exponents", exponents)?;
    outs.finish(prov, Command::Bounds)
}

fn run_pde(opts: &RunOptions, stdout: &mut (dyn Write + Send)) -> Result<Vec<PathBuf>> {
    let mut cfg: PdeConfig = config_or_default(opts)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if opts.full {
        cfg.trials = FULL_TRIALS;
    }
    cfg.validate()?;
    if opts.dry_run {
        let outputs: Vec<String> = cfg
            .strategies
            .iter()
            .flat_map(|s| [format!("pde_{}.csv", s.label()), format!("pde_{}_trials.csv", s.label())])
            .collect();
        print_plan(stdout, Command::Pde, &cfg, &outputs)?;
        return Ok(vec![]);
    }
    let curves = pde_study(&cfg)?;
    let mut outs = Outputs::new(&opts.out)?;
    let mut prov = Provenance::new(Command::Pde.name(), &cfg, cfg.seed)?;
    for c in &curves {
        let label = c.strategy.label();
        let mut w = outs.file(format!("pde_{label}.csv"))?;
        c.write_csv(&mut w)?;
        w.flush()?;
        let mut w = outs.file(format!("pde_{label}_trials.csv"))?;
        c.write_trials_csv(&mut w)?;
        w.flush()?;
        let selected: Vec<serde_json::Value> = c
            .records
            .iter()
            .map(|r| serde_json::json!({"m": r.m, "trial": r.trial, "tolerance": r.tolerance, "epsilon": r.epsilon}))
            .collect();
        prov.record(&format!("{label}_selected_epsilon"), selected)?;
        if let Some(dev) = c.max_row_norm_deviation {
            prov.record(&format!("{label}_max_row_norm_deviation"), dev)?;
        }
    }
    outs.finish(prov, Command::Pde)
}
