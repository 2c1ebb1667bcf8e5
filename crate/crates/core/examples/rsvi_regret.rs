//! RSVI on a small random MDP. Prints cumulative regret every 500 episodes.
//!
//! cargo run --release --example rsvi_regret -- 0.3

use riskrl::harness::{aggregate, run, AgentKind, EnvSpec, ExperimentConfig};

fn main() -> riskrl::Result<()> {
    let beta = std::env::args().nth(1).map_or(Ok(0.3), |s| s.parse()).expect("beta");
    let cfg = ExperimentConfig {
        env: EnvSpec::Random {
            states: 3,
            actions: 2,
            horizon: 3,
            seed: 7,
            concentration: 1.0,
        },
        agent: AgentKind::Rsvi,
        episodes: 4000,
        delta: 0.1,
        beta,
        bonus_const: 0.1,
        seeds: (0..8).collect(),
        output: None,
    };
    for row in aggregate(&run(&cfg)?).iter().filter(|r| r.k % 500 == 0) {
        println!("K = {:>5}  regret {:>8.2}  [{:.2}, {:.2}]", row.k, row.mean, row.lo, row.hi);
    }
    Ok(())
}
