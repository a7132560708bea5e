//! Draw from each CSA sampling density and report its support and moments.

use csa::sampling::{self, EquilibriumSupport};
use csa::SampleBatch;

fn summary(name: &str, b: &SampleBatch) {
    let x = b.coordinate(0);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    println!("{name:<28} mean {mean:>8.4} var {var:>8.4} range [{lo:.3}, {hi:.3}]");
}

fn main() -> csa::Result<()> {
    let m = 20_000;
    let n = 10;
    println!("whole line, alpha = 2: {:?}", EquilibriumSupport::whole(2.0, n)?.interval);
    println!("half line, alpha = 1:  {:?}", EquilibriumSupport::half(1.0, n)?.interval);
    summary("arcsine", &sampling::sample_arcsine(m, 1, 1)?);
    summary("semicircle n=10", &sampling::sample_whole_equilibrium(2.0, n, m, 2)?);
    summary("whole line alpha=3 n=10", &sampling::sample_whole_equilibrium(3.0, n, m, 3)?);
    summary("half line alpha=1 n=10", &sampling::sample_half_equilibrium(1.0, n, m, 4)?);
    summary("Gaussian CSA d=3 (z_1)", &sampling::sample_gaussian_csa(3, n, m, 5)?);
    summary("exponential CSA d=3 (z_1)", &sampling::sample_exponential_csa(3, n, m, 6)?);
    Ok(())
}
