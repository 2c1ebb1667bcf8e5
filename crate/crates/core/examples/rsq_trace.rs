//! Step-by-step RSQ updates on a two-state chain, showing learning rate,
//! bonus and whether thresholding kicked in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riskrl::{envs, RsqAgent, RsqConfig};

fn main() -> riskrl::Result<()> {
    let mdp = envs::chain_mdp(2, 2, 0.6)?;
    let mut agent = RsqAgent::new(2, 2, 2, RsqConfig::new(20, 0.1, -0.5).with_bonus_const(0.02))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!(" h s a  s'  t  alpha   bonus      Q   clipped");
    for _ in 0..6 {
        let mut s = 0;
        for h in 0..2 {
            let rec = agent.step(&mdp, h, s, &mut rng)?;
            println!(
                " {} {} {}  {}  {}  {:.3}  {:.5}  {:.4}  {}",
                rec.step, rec.state, rec.action, rec.next_state, rec.visit, rec.alpha, rec.bonus, rec.q_new, rec.clipped
            );
            s = rec.next_state;
        }
    }
    Ok(())
}
