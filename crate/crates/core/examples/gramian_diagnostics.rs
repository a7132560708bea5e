//! Christoffel-weighted Gramians: deviation from orthonormality under CSA sampling.

use csa::diagnostics::gramian;
use csa::{BasisFamily, FamilyKind};

fn main() -> csa::Result<()> {
    println!("family        n   |R^-1/2|_1  lambda_min  lambda_max  max|R-I|");
    for kind in [FamilyKind::LEGENDRE, FamilyKind::jacobi(1.0, 1.0), FamilyKind::Hermite, FamilyKind::Laguerre] {
        let family = BasisFamily::new(kind)?;
        for n in [5, 20, 40] {
            let r = gramian(&family, n)?;
            println!(
                "{:<12} {n:>3}  {:>10.5}  {:>10.5}  {:>10.5}  {:>8.2e}",
                kind.label(),
                r.norm1_inv_sqrt,
                r.lambda_min,
                r.lambda_max,
                r.deviation_from_identity()
            );
        }
    }
    Ok(())
}
