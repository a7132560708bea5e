//! Samplers for every measure used by the recovery strategies.
//!
//! - CSA: equilibrium measures (arcsine, expanded whole/half-line measures,
//!   ball, simplex and the two conjectured multivariate densities).
//! - MC: the orthogonality density itself.
//! - Asymptotic: Chebyshev sampling for bounded variables and uniform
//!   sampling of a ball for Gaussian variables.
//!
//! All samplers are pure functions of their parameters and seed.

pub mod equilibrium;

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, Gamma, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orthopoly::FamilyKind;
use crate::rng::{stream, Stream};

pub use equilibrium::{mrs_half, mrs_whole, EquilibriumSupport, SupportKind, WholeLineTable};

/// Sampling strategy together with its matching preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Orthogonality density, no preconditioning.
    Mc,
    /// Equilibrium measure with Christoffel preconditioning.
    Csa,
    /// Chebyshev sampling with envelope weights (bounded families only).
    AsymptoticBounded,
    /// Uniform ball sampling with Gaussian envelope weights (Hermite only).
    AsymptoticGaussian,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Mc => "mc",
            Strategy::Csa => "csa",
            Strategy::AsymptoticBounded => "asymptotic_bounded",
            Strategy::AsymptoticGaussian => "asymptotic_gaussian",
        }
    }
}

/// Concrete density a batch was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "density", rename_all = "snake_case")]
pub enum Density {
    /// Tensor-product arcsine on `[-1, 1]^d`.
    Arcsine,
    WholeEquilibrium { alpha: f64, n: usize },
    HalfEquilibrium { alpha: f64, n: usize },
    BallEquilibrium,
    SimplexEquilibrium,
    GaussianCsa { n: usize },
    ExponentialCsa { n: usize },
    /// Independent univariate CSA densities per coordinate.
    TensorCsa { families: Vec<FamilyKind>, n: usize },
    Orthogonality { families: Vec<FamilyKind> },
    AsymptoticGaussian { n: usize },
}

/// Everything needed to reproduce a batch of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub strategy: Strategy,
    /// One family per dimension.
    pub families: Vec<FamilyKind>,
    /// Maximum degree of the dictionary.
    pub n: usize,
    pub seed: u64,
}

/// `M` samples in `d` dimensions, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub points: DMatrix<f64>,
    pub density: Density,
    pub seed: u64,
    pub spec: Option<SamplerSpec>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn point(&self, m: usize) -> Vec<f64> {
        self.points.row(m).iter().copied().collect()
    }

    /// Column `j` as a vector.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.points.column(j).iter().copied().collect()
    }

    /// CSV with a leading `# {json}` provenance line, a header row and one
    /// row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header = serde_json::json!({
            "density": self.density,
            "seed": self.seed,
            "spec": self.spec,
        });
        writeln!(out, "# {}", serde_json::to_string(&header)?)?;
        let names: Vec<String> = (1..=self.dim()).map(|j| format!("z{j}")).collect();
        writeln!(out, "{}", names.join(","))?;
        for m in 0..self.len() {
            let row: Vec<String> = self.points.row(m).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_count(m: usize, d: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_degree(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "degree n must be at least 1 for expanded equilibrium measures".into(),
        ));
    }
    Ok(())
}

fn batch(points: DMatrix<f64>, density: Density, seed: u64) -> SampleBatch {
    SampleBatch {
        points,
        density,
        seed,
        spec: None,
    }
}

fn fill<F: FnMut(&mut Stream, &mut [f64])>(m: usize, d: usize, seed: u64, mut draw: F) -> DMatrix<f64> {
    let mut rng = stream(seed);
    let mut points = DMatrix::zeros(m, d);
    let mut row = vec![0.0; d];
    for i in 0..m {
        draw(&mut rng, &mut row);
        for (j, v) in row.iter().enumerate() {
            points[(i, j)] = *v;
        }
    }
    points
}

fn beta(a: f64, b: f64) -> Beta<f64> {
    Beta::new(a, b).expect("positive shape parameters")
}

fn gamma(shape: f64) -> Gamma<f64> {
    Gamma::new(shape, 1.0).expect("positive shape")
}

fn arcsine_draw(rng: &mut Stream) -> f64 {
    let u: f64 = rng.random();
    (PI * u).cos()
}

fn unit_direction(rng: &mut Stream, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut() {
            *v = StandardNormal.sample(rng);
            norm2 += *v * *v;
        }
        if norm2 > 0.0 {
            let inv = 1.0 / norm2.sqrt();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Tensor-product arcsine (Chebyshev) samples on `[-1, 1]^d`, `z = cos(pi U)`.
pub fn sample_arcsine(m: usize, d: usize, seed: u64) -> Result<SampleBatch> {
    check_count(m, d)?;
    let points = fill(m, d, seed, |rng, row| {
        row.iter_mut().for_each(|v| *v = arcsine_draw(rng));
    });
    Ok(batch(points, Density::Arcsine, seed))
}

/// Univariate draw from the whole-line CSA density, expanded to `S^W_n`.
struct WholeSampler {
    alpha: f64,
    scale: f64,
    table: Option<std::sync::Arc<WholeLineTable>>,
    semicircle: Beta<f64>,
}

impl WholeSampler {
    fn new(alpha: f64, n: usize) -> Result<Self> {
        equilibrium::check_whole_alpha(alpha)?;
        let table = if alpha == 2.0 {
            None
        } else {
            Some(WholeLineTable::get(alpha)?)
        };
        Ok(Self {
            alpha,
            scale: (n as f64).powf(1.0 / alpha),
            table,
            semicircle: beta(1.5, 1.5),
        })
    }

    /// Draw from the unscaled measure on `[-a, a]`.
    fn draw_unit(&self, rng: &mut Stream) -> f64 {
        match &self.table {
            None => {
                // semicircle on [-sqrt 2, sqrt 2]
                let x: f64 = self.semicircle.sample(rng);
                (2.0 * x - 1.0) * std::f64::consts::SQRT_2
            }
            Some(t) => {
                let u: f64 = rng.random();
                t.quantile(u)
            }
        }
    }

    fn draw(&self, rng: &mut Stream) -> f64 {
        let _ = self.alpha;
        self.scale * self.draw_unit(rng)
    }
}

/// Samples from the expanded whole-line equilibrium density `v_n` of
/// `w = exp(-|z|^alpha)`, supported on `S^W_n = [-a^W_n, a^W_n]`.
pub fn sample_whole_equilibrium(alpha: f64, n: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    check_count(m, 1)?;
    check_degree(n)?;
    let sampler = WholeSampler::new(alpha, n)?;
    let points = fill(m, 1, seed, |rng, row| row[0] = sampler.draw(rng));
    Ok(batch(points, Density::WholeEquilibrium { alpha, n }, seed))
}

/// Force the tabulated inverse-CDF path, even for `alpha = 2`.
pub fn sample_whole_equilibrium_tabulated(
    alpha: f64,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<SampleBatch> {
    check_count(m, 1)?;
    check_degree(n)?;
    let table = WholeLineTable::get(alpha)?;
    let scale = (n as f64).powf(1.0 / alpha);
    let points = fill(m, 1, seed, |rng, row| {
        let u: f64 = rng.random();
        row[0] = scale * table.quantile(u);
    });
    Ok(batch(points, Density::WholeEquilibrium { alpha, n }, seed))
}

struct HalfSampler {
    alpha: f64,
    scale: f64,
    whole: Option<WholeSampler>,
    beta: Beta<f64>,
}

impl HalfSampler {
    fn new(alpha: f64, n: usize) -> Result<Self> {
        equilibrium::check_half_alpha(alpha)?;
        let whole = if alpha == 1.0 {
            None
        } else {
            Some(WholeSampler::new(2.0 * alpha, 1)?)
        };
        Ok(Self {
            alpha,
            scale: (n as f64).powf(1.0 / alpha),
            whole,
            beta: beta(0.5, 1.5),
        })
    }

    fn draw(&self, rng: &mut Stream) -> f64 {
        let unit = match &self.whole {
            None => 4.0 * self.beta.sample(rng),
            Some(w) => {
                let y = w.draw_unit(rng);
                2f64.powf(1.0 / self.alpha) * y * y
            }
        };
        self.scale * unit
    }
}

/// Samples from the expanded half-line equilibrium density of
/// `w = exp(-z^alpha)`, supported on `S^H_n = [0, a^H_n]`.
///
/// `alpha = 1` uses the closed form `4n Beta(1/2, 3/2)`; other exponents map
/// whole-line samples `Y` of exponent `2 alpha` through `2^{1/alpha} Y^2`.
pub fn sample_half_equilibrium(alpha: f64, n: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    check_count(m, 1)?;
    check_degree(n)?;
    let sampler = HalfSampler::new(alpha, n)?;
    let points = fill(m, 1, seed, |rng, row| row[0] = sampler.draw(rng));
    Ok(batch(points, Density::HalfEquilibrium { alpha, n }, seed))
}

/// Same measure as [`sample_half_equilibrium`] but always through the
/// whole-line transform, including `alpha = 1`.
pub fn sample_half_equilibrium_transformed(
    alpha: f64,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<SampleBatch> {
    check_count(m, 1)?;
    check_degree(n)?;
    equilibrium::check_half_alpha(alpha)?;
    let sampler = HalfSampler {
        alpha,
        scale: (n as f64).powf(1.0 / alpha),
        whole: Some(WholeSampler::new(2.0 * alpha, 1)?),
        beta: beta(0.5, 1.5),
    };
    let points = fill(m, 1, seed, |rng, row| row[0] = sampler.draw(rng));
    Ok(batch(points, Density::HalfEquilibrium { alpha, n }, seed))
}

/// Equilibrium measure of the unit ball, density proportional to
/// `(1 - |z|^2)^{-1/2}`.
pub fn sample_ball_equilibrium(d: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    check_count(m, d)?;
    let radial = beta(d as f64 / 2.0, 0.5);
    let points = fill(m, d, seed, |rng, row| {
        unit_direction(rng, row);
        let r = radial.sample(rng).sqrt();
        row.iter_mut().for_each(|v| *v *= r);
    });
    Ok(batch(points, Density::BallEquilibrium, seed))
}

fn dirichlet_truncated(rng: &mut Stream, shapes: &[Gamma<f64>], row: &mut [f64]) {
    let d = row.len();
    let mut total = 0.0;
    for j in 0..d {
        row[j] = shapes[j].sample(rng);
        total += row[j];
    }
    total += shapes[d].sample(rng);
    row.iter_mut().for_each(|v| *v /= total);
}

/// Equilibrium measure of the unit simplex: Dirichlet(1/2, ..., 1/2) in
/// `d + 1` coordinates with the last one dropped.
pub fn sample_simplex_equilibrium(d: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    check_count(m, d)?;
    let shapes: Vec<Gamma<f64>> = (0..=d).map(|_| gamma(0.5)).collect();
    let points = fill(m, d, seed, |rng, row| dirichlet_truncated(rng, &shapes, row));
    Ok(batch(points, Density::SimplexEquilibrium, seed))
}

/// Conjectured CSA density for `exp(-|z|^2)` on `R^d`, expanded to the ball
/// of radius `sqrt(2n)`.
pub fn sample_gaussian_csa(d: usize, n: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    check_count(m, d)?;
    check_degree(n)?;
    let radial = beta(d as f64 / 2.0, d as f64 / 2.0 + 1.0);
    let two_n = 2.0 * n as f64;
    let points = fill(m, d, seed, |rng, row| {
        unit_direction(rng, row);
        let r = (two_n * radial.sample(rng)).sqrt();
        row.iter_mut().for_each(|v| *v *= r);
    });
    Ok(batch(points, Density::GaussianCsa { n }, seed))
}

/// Conjectured CSA density for `exp(-|z|_1)` on `[0, inf)^d`: a truncated
/// Dirichlet(1/2, ..., 1/2, d/2 + 1) scaled by `4n`.
pub fn sample_exponential_csa(d: usize, n: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    check_count(m, d)?;
    check_degree(n)?;
    let mut shapes: Vec<Gamma<f64>> = (0..d).map(|_| gamma(0.5)).collect();
    shapes.push(gamma(d as f64 / 2.0 + 1.0));
    let scale = 4.0 * n as f64;
    let points = fill(m, d, seed, |rng, row| {
        dirichlet_truncated(rng, &shapes, row);
        row.iter_mut().for_each(|v| *v *= scale);
    });
    Ok(batch(points, Density::ExponentialCsa { n }, seed))
}

enum OrthoDraw {
    Uniform,
    Beta(Beta<f64>),
    Normal(Normal<f64>),
    Exp(Exp<f64>),
}

impl OrthoDraw {
    fn new(kind: FamilyKind) -> Result<Self> {
        kind.validate()?;
        Ok(match kind {
            FamilyKind::Jacobi { a, b } if a == 0.0 && b == 0.0 => OrthoDraw::Uniform,
            // (1 - z)^a (1 + z)^b is Beta(b + 1, a + 1) mapped to [-1, 1]
            FamilyKind::Jacobi { a, b } => OrthoDraw::Beta(beta(b + 1.0, a + 1.0)),
            FamilyKind::Hermite => OrthoDraw::Normal(
                Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal"),
            ),
            FamilyKind::Laguerre => OrthoDraw::Exp(Exp::new(1.0).expect("valid rate")),
        })
    }

    fn draw(&self, rng: &mut Stream) -> f64 {
        match self {
            OrthoDraw::Uniform => 2.0 * rng.random::<f64>() - 1.0,
            OrthoDraw::Beta(b) => 2.0 * b.sample(rng) - 1.0,
            OrthoDraw::Normal(nrm) => nrm.sample(rng),
            OrthoDraw::Exp(e) => e.sample(rng),
        }
    }
}

/// Independent draws from each coordinate's orthogonality density.
pub fn sample_mc(families: &[FamilyKind], m: usize, seed: u64) -> Result<SampleBatch> {
    let d = families.len();
    check_count(m, d)?;
    let draws: Vec<OrthoDraw> = families.iter().map(|&k| OrthoDraw::new(k)).collect::<Result<_>>()?;
    let points = fill(m, d, seed, |rng, row| {
        for (v, dr) in row.iter_mut().zip(&draws) {
            *v = dr.draw(rng);
        }
    });
    Ok(batch(
        points,
        Density::Orthogonality {
            families: families.to_vec(),
        },
        seed,
    ))
}

/// Uniform samples in the ball of radius `sqrt(2n + 1)`.
pub fn sample_asymptotic_gaussian(d: usize, n: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    check_count(m, d)?;
    check_degree(n)?;
    let r = (2.0 * n as f64 + 1.0).sqrt();
    let inv_d = 1.0 / d as f64;
    let points = fill(m, d, seed, |rng, row| {
        unit_direction(rng, row);
        let u: f64 = rng.random();
        let rho = r * u.powf(inv_d);
        row.iter_mut().for_each(|v| *v *= rho);
    });
    Ok(batch(points, Density::AsymptoticGaussian { n }, seed))
}

enum UnivariateCsa {
    Arcsine,
    Whole(WholeSampler),
    Half(HalfSampler),
}

/// Tensor product of univariate CSA densities, one per coordinate.
pub fn sample_tensor_csa(families: &[FamilyKind], n: usize, m: usize, seed: u64) -> Result<SampleBatch> {
    let d = families.len();
    check_count(m, d)?;
    let mut parts = Vec::with_capacity(d);
    for &k in families {
        k.validate()?;
        parts.push(match k {
            FamilyKind::Jacobi { .. } => UnivariateCsa::Arcsine,
            FamilyKind::Hermite => {
                check_degree(n)?;
                UnivariateCsa::Whole(WholeSampler::new(2.0, n)?)
            }
            FamilyKind::Laguerre => {
                check_degree(n)?;
                UnivariateCsa::Half(HalfSampler::new(1.0, n)?)
            }
        });
    }
    let points = fill(m, d, seed, |rng, row| {
        for (v, p) in row.iter_mut().zip(&parts) {
            *v = match p {
                UnivariateCsa::Arcsine => arcsine_draw(rng),
                UnivariateCsa::Whole(w) => w.draw(rng),
                UnivariateCsa::Half(h) => h.draw(rng),
            };
        }
    });
    Ok(batch(
        points,
        Density::TensorCsa {
            families: families.to_vec(),
            n,
        },
        seed,
    ))
}

impl SamplerSpec {
    pub fn new(strategy: Strategy, families: Vec<FamilyKind>, n: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            strategy,
            families,
            n,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.families.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::InvalidParameter("no families given".into()));
        }
        for k in &self.families {
            k.validate()?;
        }
        match self.strategy {
            Strategy::AsymptoticBounded if !self.families.iter().all(|k| k.is_bounded()) => Err(
                Error::UnsupportedFamily("asymptotic bounded sampling needs bounded families".into()),
            ),
            Strategy::AsymptoticGaussian
                if !self.families.iter().all(|k| *k == FamilyKind::Hermite) =>
            {
                Err(Error::UnsupportedFamily(
                    "asymptotic Gaussian sampling needs Hermite families".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Draw `m` samples.
    pub fn draw(&self, m: usize) -> Result<SampleBatch> {
        self.validate()?;
        let d = self.dim();
        let all = |k: FamilyKind| self.families.iter().all(|f| *f == k);
        let mut batch = match self.strategy {
            Strategy::Mc => sample_mc(&self.families, m, self.seed)?,
            Strategy::AsymptoticBounded => sample_arcsine(m, d, self.seed)?,
            Strategy::AsymptoticGaussian => sample_asymptotic_gaussian(d, self.n, m, self.seed)?,
            Strategy::Csa => {
                if self.families.iter().all(|k| k.is_bounded()) {
                    sample_arcsine(m, d, self.seed)?
                } else if d > 1 && all(FamilyKind::Hermite) {
                    sample_gaussian_csa(d, self.n, m, self.seed)?
                } else if d > 1 && all(FamilyKind::Laguerre) {
                    sample_exponential_csa(d, self.n, m, self.seed)?
                } else {
                    sample_tensor_csa(&self.families, self.n, m, self.seed)?
                }
            }
        };
        batch.spec = Some(self.clone());
        Ok(batch)
    }
}
