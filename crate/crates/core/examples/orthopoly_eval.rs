//! Overflow-safe evaluation of high-degree orthonormal polynomials.

use csa::{BasisFamily, FamilyKind};

fn main() -> csa::Result<()> {
    for kind in [FamilyKind::LEGENDRE, FamilyKind::jacobi(2.0, 5.0), FamilyKind::Hermite, FamilyKind::Laguerre] {
        let family = BasisFamily::new(kind)?;
        let z = match kind {
            FamilyKind::Jacobi { .. } => 0.9,
            FamilyKind::Hermite => 60.0,
            FamilyKind::Laguerre => 2000.0,
        };
        let e = family.eval_basis(200, z)?;
        let ln_lambda = -(e.sum_squares().ln() + 2.0 * e.log_scale);
        println!(
            "{:<12} z = {z:>6}: phi_200 = {:.6e} * exp({:.2}), ln lambda_201 = {ln_lambda:.3}",
            kind.label(),
            e.values[200],
            e.log_scale
        );
    }
    let legendre = BasisFamily::legendre();
    println!("Legendre phi_3(0.5) = {:.12}", legendre.eval_raw(3, 0.5)?);
    Ok(())
}
