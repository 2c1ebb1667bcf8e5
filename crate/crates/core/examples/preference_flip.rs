//! A safe arm worth 0.6 against a coin flip between 0 and 1. The seeking
//! agent gambles, the averse one does not.

use riskrl::dp::solve_optimal;
use riskrl::{envs, RiskParam};

fn main() -> riskrl::Result<()> {
    let mdp = envs::preference_flip();
    for beta in [-1.0, 1e-12, 1.0] {
        let (tables, pi) = solve_optimal(&mdp, RiskParam::new(beta))?;
        let choice = if pi.action(0, 0) == 0 { "safe" } else { "risky" };
        println!(
            "beta {beta:>6}: Q(safe) = {:.6}, Q(risky) = {:.6} -> {choice}",
            tables.action_value(0, 0, 0),
            tables.action_value(0, 0, 1)
        );
    }
    Ok(())
}
