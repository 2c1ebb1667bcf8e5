//! Risk-sensitive value iteration.
//!
//! Each episode re-estimates every `Q_h` backward from the empirical
//! transition counts. For a visited pair the least-squares fit of
//! `exp(beta [r + V_{h+1}(s')])` onto the canonical basis is just the sample
//! mean over past visits, so the dataset is kept as counts `M_h(s, a, s')`.
//! A bonus `c |exp(beta H) - 1| sqrt(S log(2SAT/delta) / N)` is then added
//! (`beta > 0`) or subtracted (`beta < 0`) in the exponentiated domain, see
//! [`crate::ucb`].

use ndarray::{Array3, Array4};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::dp::{argmax_row, ValueTables};
use crate::error::{Error, Result};
use crate::mdp::Policy;
use crate::risk::RiskParam;
use crate::ucb::{exp_bonus_scale, neutral_ucb, rs_ucb};

pub const DEFAULT_BONUS_CONST: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsviConfig {
    /// Number of episodes `K`; fixes `T = K H` in the bonus.
    pub episodes: usize,
    pub delta: f64,
    pub risk: RiskParam,
    /// `c_gamma`.
    pub bonus_const: f64,
}

impl RsviConfig {
    pub fn new(episodes: usize, delta: f64, beta: f64) -> Self {
        RsviConfig {
            episodes,
            delta,
            risk: RiskParam::new(beta),
            bonus_const: DEFAULT_BONUS_CONST,
        }
    }

    pub fn with_bonus_const(mut self, c: f64) -> Self {
        self.bonus_const = c;
        self
    }
}

#[derive(Debug, Clone)]
pub struct RsviAgent {
    config: RsviConfig,
    states: usize,
    actions: usize,
    horizon: usize,
    /// `N_h(s, a)`
    counts: Array3<u64>,
    /// `M_h(s, a, s')`
    transition_counts: Array4<u64>,
    /// Last observed `r_h(s, a)`; rewards are deterministic.
    rewards: Array3<f64>,
    tables: ValueTables,
    /// `sqrt(S log(2SAT/delta))`
    confidence: f64,
    bonus_scale: f64,
}

impl RsviAgent {
    pub fn new(states: usize, actions: usize, horizon: usize, config: RsviConfig) -> Result<Self> {
        validate_common(config.episodes, config.delta, config.bonus_const)?;
        config.risk.check_horizon(horizon)?;
        let t = (config.episodes * horizon) as f64;
        let sat = (states * actions) as f64 * t;
        let confidence = (states as f64 * (2.0 * sat / config.delta).ln()).sqrt();
        let bonus_scale = if config.risk.is_neutral() {
            horizon as f64
        } else {
            exp_bonus_scale(config.risk, horizon)
        };
        Ok(RsviAgent {
            config,
            states,
            actions,
            horizon,
            counts: Array3::zeros((horizon, states, actions)),
            transition_counts: Array4::zeros((horizon, states, actions, states)),
            rewards: Array3::zeros((horizon, states, actions)),
            tables: ValueTables::optimistic(horizon, states, actions),
            confidence,
            bonus_scale,
        })
    }

    pub fn config(&self) -> &RsviConfig {
        &self.config
    }

    pub fn tables(&self) -> &ValueTables {
        &self.tables
    }

    pub fn count(&self, h: usize, s: usize, a: usize) -> u64 {
        self.counts[[h, s, a]]
    }

    pub fn transition_count(&self, h: usize, s: usize, a: usize, s_next: usize) -> u64 {
        self.transition_counts[[h, s, a, s_next]]
    }

    /// Bonus after `n >= 1` visits. In neutral mode this is the value-scale
    /// limit `c H sqrt(S log(2SAT/delta) / n)`.
    pub fn bonus(&self, n: u64) -> f64 {
        self.config.bonus_const * self.bonus_scale * self.confidence / (n as f64).sqrt()
    }

    /// Backward value estimation for the coming episode.
    pub fn plan(&mut self) -> Result<()> {
        let risk = self.config.risk;
        let beta = risk.beta();
        for h in (0..self.horizon).rev() {
            let cap = (self.horizon - h) as f64;
            for s in 0..self.states {
                for a in 0..self.actions {
                    let n = self.counts[[h, s, a]];
                    if n == 0 {
                        self.tables.q[[h, s, a]] = cap;
                        continue;
                    }
                    let r = self.rewards[[h, s, a]];
                    let inv_n = 1.0 / n as f64;
                    let bonus = self.bonus(n);
                    let out = if risk.is_neutral() {
                        let mut mean = 0.0;
                        for s_next in 0..self.states {
                            let m = self.transition_counts[[h, s, a, s_next]];
                            if m > 0 {
                                mean += m as f64 * (r + self.tables.v[[h + 1, s_next]]);
                            }
                        }
                        neutral_ucb(mean * inv_n, bonus, cap)
                    } else {
                        let mut w = 0.0;
                        for s_next in 0..self.states {
                            let m = self.transition_counts[[h, s, a, s_next]];
                            if m > 0 {
                                w += m as f64 * (beta * (r + self.tables.v[[h + 1, s_next]])).exp();
                            }
                        }
                        let w = w * inv_n;
                        if !w.is_finite() {
                            return Err(Error::NumericOverflow("rsvi intermediate value"));
                        }
                        rs_ucb(risk, w, bonus, cap)
                    };
                    self.tables.q[[h, s, a]] = out.value;
                }
                self.tables.v[[h, s]] = argmax_row(&self.tables.q, h, s).1;
            }
        }
        Ok(())
    }

    /// Greedy action in the current estimates, lowest index on ties.
    pub fn act(&self, h: usize, s: usize) -> usize {
        argmax_row(&self.tables.q, h, s).0
    }

    /// Records `(s, a, s')` at step `h`. The reward is kept as the known
    /// deterministic `r_h(s, a)`.
    pub fn observe(&mut self, h: usize, s: usize, a: usize, reward: f64, s_next: usize) {
        self.counts[[h, s, a]] += 1;
        self.transition_counts[[h, s, a, s_next]] += 1;
        self.rewards[[h, s, a]] = reward;
    }

    pub fn greedy_policy(&self) -> Policy {
        self.tables.greedy_policy()
    }
}

pub(crate) fn validate_common(episodes: usize, delta: f64, bonus_const: f64) -> Result<()> {
    if episodes == 0 {
        return Err(Error::InvalidConfig("number of episodes must be positive".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidConfig(format!("delta = {delta} is outside (0, 1]")));
    }
    if !(bonus_const > 0.0 && bonus_const.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "bonus constant must be positive, got {bonus_const}"
        )));
    }
    Ok(())
}

impl Agent for RsviAgent {
    fn begin_episode(&mut self, _rng: &mut dyn RngCore) -> Result<()> {
        self.plan()
    }

    fn policy(&self) -> Policy {
        self.greedy_policy()
    }

    fn act(&mut self, h: usize, s: usize) -> usize {
        RsviAgent::act(self, h, s)
    }

    fn observe(&mut self, h: usize, s: usize, a: usize, reward: f64, s_next: usize) -> Result<()> {
        RsviAgent::observe(self, h, s, a, reward, s_next);
        Ok(())
    }

    fn q_estimates(&self) -> Option<&Array3<f64>> {
        Some(&self.tables.q)
    }
}
