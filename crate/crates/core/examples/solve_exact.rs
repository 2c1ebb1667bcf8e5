//! Exact risk-sensitive DP on a random MDP for a sweep of beta.
//!
//! cargo run --example solve_exact

use riskrl::dp::solve_optimal;
use riskrl::{envs, RiskParam};

fn main() -> riskrl::Result<()> {
    let mdp = envs::random_mdp(4, 3, 5, 42, 0.7)?;
    println!("{:>6}  {:>8}  first-step policy", "beta", "V1(0)");
    for beta in [-2.0, -0.5, -0.1, 0.0, 0.1, 0.5, 2.0] {
        let (tables, pi) = solve_optimal(&mdp, RiskParam::new(beta))?;
        println!("{beta:>6}  {:>8.4}  {:?}", tables.value(0, 0), pi.table()[0]);
    }
    Ok(())
}
