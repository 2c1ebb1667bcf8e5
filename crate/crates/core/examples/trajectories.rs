//! Sampling episodes and checking the brute-force value against DP.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riskrl::dp::{brute_force_value, evaluate_policy};
use riskrl::mdp::{enumerate_trajectories, sample_episode};
use riskrl::{envs, Policy, RiskParam};

fn main() -> riskrl::Result<()> {
    let mdp = envs::chain_mdp(3, 4, 0.7)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // always push right
    let pi = Policy::from_table(vec![vec![1; 3]; 4], 2)?;
    for _ in 0..3 {
        let traj = sample_episode(&mdp, &pi, 0, &mut rng);
        let states: Vec<_> = traj.steps.iter().map(|t| t.next_state).collect();
        println!("states {states:?}, return {}", traj.total_reward);
    }
    let paths = enumerate_trajectories(&mdp, &pi, 0, 0)?;
    println!("{} distinct trajectories", paths.len());
    let risk = RiskParam::new(-0.8);
    let dp = evaluate_policy(&mdp, &pi, risk)?.value(0, 0);
    let brute = brute_force_value(&mdp, &pi, risk, 0, 0)?;
    println!("DP {dp:.12}  brute force {brute:.12}");
    Ok(())
}
