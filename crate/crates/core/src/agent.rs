//! Common interface the experiment harness drives, plus the two baseline
//! agents (a fixed policy and a uniformly random one).

use ndarray::Array3;
use rand::RngCore;

use crate::error::Result;
use crate::mdp::Policy;

/// An agent interacting with an episodic MDP.
///
/// Per episode the harness calls [`begin_episode`](Agent::begin_episode),
/// takes the [`policy`](Agent::policy) snapshot for exact regret
/// accounting, then alternates [`act`](Agent::act) and
/// [`observe`](Agent::observe) for steps `0..H`.
pub trait Agent {
    fn begin_episode(&mut self, rng: &mut dyn RngCore) -> Result<()>;

    /// The deterministic policy the agent commits to for the current episode.
    fn policy(&self) -> Policy;

    fn act(&mut self, h: usize, s: usize) -> usize;

    fn observe(&mut self, h: usize, s: usize, a: usize, reward: f64, s_next: usize) -> Result<()>;

    /// Current action-value estimates `[h, s, a]`, if the agent keeps any.
    fn q_estimates(&self) -> Option<&Array3<f64>> {
        None
    }
}

/// Plays a fixed policy forever.
#[derive(Debug, Clone)]
pub struct FixedPolicyAgent {
    policy: Policy,
}

impl FixedPolicyAgent {
    pub fn new(policy: Policy) -> Self {
        FixedPolicyAgent { policy }
    }
}

impl Agent for FixedPolicyAgent {
    fn begin_episode(&mut self, _rng: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }

    fn policy(&self) -> Policy {
        self.policy.clone()
    }

    fn act(&mut self, h: usize, s: usize) -> usize {
        self.policy.action(h, s)
    }

    fn observe(&mut self, _: usize, _: usize, _: usize, _: f64, _: usize) -> Result<()> {
        Ok(())
    }
}

/// Draws a fresh uniformly random deterministic policy every episode.
#[derive(Debug, Clone)]
pub struct UniformRandomAgent {
    horizon: usize,
    states: usize,
    actions: usize,
    current: Policy,
}

impl UniformRandomAgent {
    pub fn new(horizon: usize, states: usize, actions: usize) -> Self {
        UniformRandomAgent {
            horizon,
            states,
            actions,
            current: Policy::zeros(horizon, states),
        }
    }
}

impl Agent for UniformRandomAgent {
    fn begin_episode(&mut self, rng: &mut dyn RngCore) -> Result<()> {
        self.current = Policy::uniform_random(self.horizon, self.states, self.actions, rng);
        Ok(())
    }

    fn policy(&self) -> Policy {
        self.current.clone()
    }

    fn act(&mut self, h: usize, s: usize) -> usize {
        self.current.action(h, s)
    }

    fn observe(&mut self, _: usize, _: usize, _: usize, _: f64, _: usize) -> Result<()> {
        Ok(())
    }
}
