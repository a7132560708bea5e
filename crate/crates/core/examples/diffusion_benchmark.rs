//! The stochastic diffusion benchmark: KL field, forward solves and a small
//! CSA vs MC convergence study.

use csa::experiments::{pde_study, PdeConfig};
use csa::pde_benchmark::DiffusionModel;
use csa::{FamilyKind, Strategy};

fn main() -> csa::Result<()> {
    let model = DiffusionModel::benchmark(2)?;
    println!("KL eigenvalues: {:?}", model.field.eigenvalues);
    for z in [[0.0, 0.0], [1.0, -1.0], [-0.5, 0.8]] {
        println!("u(1/2; z = {z:?}) = {:.10}", model.qoi(&z)?);
    }
    let config = PdeConfig {
        family: FamilyKind::LEGENDRE,
        degree: 10,
        strategies: vec![Strategy::Csa, Strategy::Mc],
        m_values: vec![30, 60],
        trials: 3,
        validation_size: 2000,
        seed: 1,
        ..PdeConfig::default()
    };
    for curve in pde_study(&config)? {
        for p in &curve.points {
            println!("{:<4} M = {:>3}: median l2(w) error {:.3e}", curve.strategy.label(), p.m, p.median);
        }
    }
    Ok(())
}
