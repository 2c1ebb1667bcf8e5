//! The two-arm lower-bound instance: resolved gap, closed-form per-episode
//! loss and RSQ regret as |beta| grows.

use riskrl::envs::LowerBoundSpec;
use riskrl::harness::{run, AgentKind, EnvSpec, ExperimentConfig};

fn main() -> riskrl::Result<()> {
    let k = 5000;
    for beta in [0.05, 0.15, 0.3, -0.15] {
        let spec = LowerBoundSpec::new(6, k, beta, 0.5)?;
        let cfg = ExperimentConfig {
            env: EnvSpec::LowerBound {
                h_inner: 6,
                episodes: k,
                beta,
                gap_const: 0.5,
            },
            agent: AgentKind::Rsq,
            episodes: k,
            delta: 0.1,
            beta,
            bonus_const: 0.1,
            seeds: (0..4).collect(),
            output: None,
        };
        let records = run(&cfg)?;
        let regret = records.iter().filter(|r| r.k == k).map(|r| r.cum_regret).sum::<f64>() / 4.0;
        println!(
            "beta {beta:>5}: p1 {:.4} p2 {:.4} gap/episode {:.5} RSQ regret {regret:.2}",
            spec.resolved.p1,
            spec.resolved.p2,
            spec.closed_form_gap()
        );
    }
    Ok(())
}
