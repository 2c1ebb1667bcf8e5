//! All four agents on the same instance and seeds.

use riskrl::harness::{run, AgentKind, EnvSpec, ExperimentConfig};

fn main() -> riskrl::Result<()> {
    for agent in [AgentKind::Optimal, AgentKind::Rsvi, AgentKind::Rsq, AgentKind::UniformRandom] {
        let cfg = ExperimentConfig {
            env: EnvSpec::Chain {
                states: 4,
                horizon: 4,
                p_forward: 0.7,
            },
            agent,
            episodes: 2000,
            delta: 0.1,
            beta: -0.4,
            bonus_const: 0.1,
            seeds: vec![0, 1, 2, 3],
            output: None,
        };
        let records = run(&cfg)?;
        let final_regret: f64 = records.iter().filter(|r| r.k == 2000).map(|r| r.cum_regret).sum::<f64>() / 4.0;
        println!("{agent:?}: {final_regret:.2}");
    }
    Ok(())
}
