//! Coherence growth L(n) and the resulting sample-count bound.

use csa::diagnostics::{coherence_scan, gramian, sample_count_bound, GridSpec};
use csa::{BasisFamily, FamilyKind};

fn main() -> csa::Result<()> {
    let degrees: Vec<usize> = (10..=100).step_by(10).collect();
    for kind in [FamilyKind::LEGENDRE, FamilyKind::Hermite, FamilyKind::Laguerre] {
        let family = BasisFamily::new(kind)?;
        let rep = coherence_scan(&family, &degrees, GridSpec::default())?;
        let r = gramian(&family, 40)?;
        let l40 = rep.l_values[3];
        let m = sample_count_bound(r.norm1_inv_sqrt, l40, 5, 41)?;
        println!(
            "{:<10} fitted exponent {:.3}, L(40) = {l40:.3}, bound for s = 5, N = 41: M >= {m}",
            kind.label(),
            rep.fitted_exponent
        );
    }
    Ok(())
}
