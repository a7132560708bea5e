//! Recover a planted sparse Legendre expansion from few CSA samples.

use csa::experiments::{manufactured_trial, TrialConfig};
use csa::{FamilyKind, Strategy};

fn main() -> csa::Result<()> {
    for strategy in [Strategy::Csa, Strategy::Mc] {
        let config = TrialConfig {
            family: FamilyKind::LEGENDRE,
            d: 2,
            n: 20,
            strategy,
            s: 10,
            m: 80,
            seed: 42,
            epsilon: 0.0,
            threshold: 0.01,
            trials: 10,
        };
        let outcomes: Vec<_> = (0..config.trials as u64)
            .map(|t| manufactured_trial(&config, t))
            .collect::<csa::Result<_>>()?;
        let hits = outcomes.iter().filter(|o| o.success).count();
        let worst = outcomes.iter().map(|o| o.relative_error).fold(0.0, f64::max);
        println!(
            "{:<4} N = 231, M = 80, s = 10: {hits}/{} recovered, worst relative error {worst:.2e}",
            strategy.label(),
            config.trials
        );
    }
    Ok(())
}
