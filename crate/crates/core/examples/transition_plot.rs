//! A coarse recovery-transition map printed as text, one character per cell.

use csa::experiments::{centred_ratios, transition_study, TransitionConfig};
use csa::FamilyKind;

fn main() -> csa::Result<()> {
    let config = TransitionConfig {
        family: FamilyKind::LEGENDRE,
        d: 2,
        n: 10,
        m_ratios: centred_ratios(8),
        s_ratios: centred_ratios(8),
        trials: 4,
        seed: 3,
        ..TransitionConfig::default()
    };
    let shades = [' ', '.', ':', '+', '#'];
    for grid in transition_study(&config)? {
        println!("{} (N = {}), rows s/M descending, columns M/N ascending", grid.strategy.label(), grid.n_terms);
        for s in config.s_ratios.iter().rev() {
            let row: String = config
                .m_ratios
                .iter()
                .map(|m| {
                    let cell = grid
                        .cells
                        .iter()
                        .find(|c| c.plan.m_ratio == *m && c.plan.s_ratio == *s)
                        .expect("cell");
                    shades[(cell.rate() * 4.0).round() as usize]
                })
                .collect();
            println!("  {s:.3} |{row}|");
        }
        println!("  mean success {:.3}", grid.mean_rate());
    }
    Ok(())
}
