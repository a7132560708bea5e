//! Christoffel preconditioning: CSA rows all have norm sqrt(N), MC rows do not.

use csa::experiments::{row_norm_deviation, sampled_design, Basis};
use csa::preconditioner::preconditioned_matrix;
use csa::{FamilyKind, Strategy};

fn main() -> csa::Result<()> {
    let basis = Basis::isotropic(FamilyKind::Hermite, 2, 12)?;
    println!("Hermite, d = 2, total degree 12: N = {}", basis.len());
    for strategy in [Strategy::Csa, Strategy::Mc] {
        let sd = sampled_design(&basis, strategy, 200, 7)?;
        let a = preconditioned_matrix(&sd.design, &sd.weights)?;
        let norms: Vec<f64> = a.row_iter().map(|r| r.norm()).collect();
        let max = norms.iter().copied().fold(0.0, f64::max);
        let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "{:<4} row norms in [{min:.3e}, {max:.3e}], max relative deviation from sqrt(N) {:.2e}",
            strategy.label(),
            row_norm_deviation(&a)
        );
    }
    Ok(())
}
