mod common;

use std::sync::OnceLock;

use csa::diagnostics::{coherence_value, gramian, GridSpec};
use csa::experiments::{row_norm_deviation, sampled_design, Basis};
use csa::l1_solver::{lars_lasso_path, RecoveryProblem};
use csa::pde_benchmark::DiffusionModel;
use csa::preconditioner::christoffel_lambda;
use csa::quadrature::{gauss_legendre, gauss_legendre_interval};
use csa::{BasisFamily, FamilyKind, MultiIndexSet, SamplerSpec, Strategy as Sampling};
use nalgebra::DMatrix;
use proptest::prelude::*;

const FAMILIES: [FamilyKind; 6] = [
    FamilyKind::LEGENDRE,
    FamilyKind::Jacobi { a: 1.0, b: 1.0 },
    FamilyKind::Jacobi { a: 2.0, b: 5.0 },
    FamilyKind::Jacobi { a: -0.5, b: -0.5 },
    FamilyKind::Hermite,
    FamilyKind::Laguerre,
];

/// Nodes and probability weights that integrate `p w` exactly (or to
/// roundoff) for polynomials of degree <= 100 under each density.
fn reference_rule(kind: FamilyKind) -> (Vec<f64>, Vec<f64>) {
    match kind {
        FamilyKind::Jacobi { a, b } if a == -0.5 && b == -0.5 => {
            let k = 120;
            let x = (1..=k)
                .map(|i| ((2 * i - 1) as f64 * std::f64::consts::PI / (2 * k) as f64).cos())
                .collect();
            (x, vec![1.0 / k as f64; k])
        }
        FamilyKind::Jacobi { .. } => {
            // integer exponents: the density is a polynomial
            let (x, w) = gauss_legendre(120);
            let w = x.iter().zip(&w).map(|(&z, &wi)| wi * kind.density(z)).collect();
            (x, w)
        }
        FamilyKind::Hermite => panels(-14.0, 14.0, 8, 80, kind),
        FamilyKind::Laguerre => panels(0.0, 350.0, 14, 80, kind),
    }
}

fn panels(lo: f64, hi: f64, count: usize, per: usize, kind: FamilyKind) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / count as f64;
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for p in 0..count {
        let (x, w) = gauss_legendre_interval(per, lo + p as f64 * h, lo + (p + 1) as f64 * h);
        for (z, wi) in x.into_iter().zip(w) {
            ws.push(wi * kind.density(z));
            xs.push(z);
        }
    }
    (xs, ws)
}

#[test]
fn orthonormal_under_probability_density() {
    let n = 50;
    for kind in FAMILIES {
        let family = BasisFamily::new(kind).unwrap();
        let (xs, ws) = reference_rule(kind);
        let mut g = DMatrix::<f64>::zeros(n + 1, n + 1);
        for (&z, &w) in xs.iter().zip(&ws) {
            let phi = family.eval_basis(n, z).unwrap().unscaled();
            for i in 0..=n {
                for j in 0..=n {
                    g[(i, j)] += w * phi[i] * phi[j];
                }
            }
        }
        let dev = (g - DMatrix::identity(n + 1, n + 1)).amax();
        assert!(dev < 1e-10, "{kind:?}: |G - I| = {dev:e}");
    }
}

/// Plain recurrence without any rescaling.
fn raw_values(family: &BasisFamily, n: usize, z: f64) -> Vec<f64> {
    let (a, b) = (family.diag(), family.off_diag());
    let mut v = vec![1.0];
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = ((z - a[k]) * cur - b[k] * prev) / b[k + 1];
        prev = cur;
        cur = next;
        v.push(next);
    }
    v
}

fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn family_strategy() -> impl Strategy<Value = FamilyKind> {
    prop::sample::select(FAMILIES.to_vec())
}

fn point_in(kind: FamilyKind, u: f64) -> f64 {
    match kind {
        FamilyKind::Jacobi { .. } => 2.0 * u - 1.0,
        FamilyKind::Hermite => 60.0 * u - 30.0,
        FamilyKind::Laguerre => 400.0 * u,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rescaling_preserves_direction(kind in family_strategy(), n in 0usize..300, u in 0.0f64..1.0) {
        let family = BasisFamily::new(kind).unwrap();
        let z = point_in(kind, u);
        let raw = raw_values(&family, n, z);
        let norm2: f64 = raw.iter().map(|x| x * x).sum();
        prop_assume!(norm2.is_finite() && norm2 > 0.0);
        let scaled = unit(&family.eval_basis(n, z).unwrap().values);
        for (p, q) in unit(&raw).iter().zip(&scaled) {
            prop_assert!((p - q).abs() < 1e-13, "{p} vs {q}");
        }
    }

    #[test]
    fn symmetric_families_have_parity(
        kind in prop::sample::select(vec![FamilyKind::LEGENDRE, FamilyKind::jacobi(1.5, 1.5), FamilyKind::Hermite]),
        n in 0usize..120,
        u in 0.0f64..1.0,
    ) {
        let family = BasisFamily::new(kind).unwrap();
        let z = point_in(kind, u);
        let plus = family.eval_basis(n, z).unwrap();
        let minus = family.eval_basis(n, -z).unwrap();
        prop_assert_eq!(plus.log_scale, minus.log_scale);
        for (k, (p, m)) in plus.values.iter().zip(&minus.values).enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((m - sign * p).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn total_degree_sets_are_nested(d in 1usize..6, n in 0usize..7) {
        let small = MultiIndexSet::total_degree(d, n).unwrap();
        let big = MultiIndexSet::total_degree(d, n + 1).unwrap();
        prop_assert!(small.len() < big.len());
        for idx in small.iter() {
            prop_assert!(big.contains(idx));
        }
    }

    #[test]
    fn christoffel_function_bounds(
        kind in family_strategy(),
        d in 1usize..4,
        n in 0usize..12,
        us in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let families = vec![BasisFamily::new(kind).unwrap(); d];
        let z: Vec<f64> = us[..d].iter().map(|&u| point_in(kind, u) / 4.0).collect();
        let small = MultiIndexSet::total_degree(d, n).unwrap();
        let big = MultiIndexSet::total_degree(d, n + 1).unwrap();
        let ls = christoffel_lambda(&families, &small, &z).unwrap();
        let lb = christoffel_lambda(&families, &big, &z).unwrap();
        prop_assert!(ls > 0.0 && ls <= 1.0 + 1e-15);
        prop_assert!(lb > 0.0 && lb <= ls * (1.0 + 1e-13));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn csa_rows_have_norm_sqrt_n(
        kind in family_strategy(),
        d in 1usize..4,
        n in 1usize..12,
        seed in any::<u64>(),
    ) {
        let basis = Basis::isotropic(kind, d, n).unwrap();
        let sd = sampled_design(&basis, Sampling::Csa, 25, seed).unwrap();
        let a = csa::preconditioner::preconditioned_matrix(&sd.design, &sd.weights).unwrap();
        prop_assert!(row_norm_deviation(&a) < 1e-12);
    }

    #[test]
    fn identical_specs_draw_identical_bits(
        kind in family_strategy(),
        strategy in prop::sample::select(vec![Sampling::Mc, Sampling::Csa]),
        d in 1usize..4,
        n in 1usize..20,
        seed in any::<u64>(),
    ) {
        let spec = SamplerSpec::new(strategy, vec![kind; d], n, seed).unwrap();
        let a = spec.draw(50).unwrap();
        let b = spec.draw(50).unwrap();
        prop_assert!(a.points.iter().zip(b.points.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn homotopy_certificates(seed in any::<u64>()) {
        let (a, b) = common::random_instance(seed);
        let path = lars_lasso_path(&RecoveryProblem::new(a.clone(), b.clone(), 0.0).unwrap()).unwrap();
        prop_assert!(common::kkt_violation(&a, &b, &path) < 1e-8);
        for w in path.points.windows(2) {
            prop_assert!(w[1].residual_norm <= w[0].residual_norm + 1e-12);
        }
    }
}

fn model() -> &'static DiffusionModel {
    static MODEL: OnceLock<DiffusionModel> = OnceLock::new();
    MODEL.get_or_init(|| DiffusionModel::benchmark(2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diffusion_solution_is_positive(z0 in -4.0f64..4.0, z1 in -4.0f64..4.0) {
        let u = model().solve_sample(&[z0, z1]).unwrap();
        let p = u.len();
        prop_assert!(u.iter().skip(1).take(p - 2).all(|v| *v > 0.0));
    }
}

#[test]
fn gramian_square_roots() {
    for kind in [FamilyKind::Hermite, FamilyKind::Laguerre, FamilyKind::jacobi(1.0, 1.0)] {
        let rep = gramian(&BasisFamily::new(kind).unwrap(), 12).unwrap();
        let r = rep.matrix();
        let k = r.nrows();
        assert!((&rep.sqrt * &rep.sqrt - &r).amax() < 1e-10);
        assert!((&rep.inv_sqrt * &r * &rep.inv_sqrt - DMatrix::identity(k, k)).amax() < 1e-9);
    }
}

#[test]
fn coherence_grid_doubling_is_stable() {
    let coarse = GridSpec::default();
    let fine = GridSpec {
        points_per_degree: 2 * coarse.points_per_degree,
        ..coarse
    };
    for kind in FAMILIES {
        let family = BasisFamily::new(kind).unwrap();
        for n in [10, 40] {
            let (a, _) = coherence_value(&family, n, coarse).unwrap();
            let (b, _) = coherence_value(&family, n, fine).unwrap();
            assert!((a - b).abs() / b < 5e-3, "{kind:?} n = {n}: {a} vs {b}");
        }
    }
}
