//! Risk-sensitive Q-learning.
//!
//! Online updates of only the visited `(h, s, a)`, mixing the old
//! exponentiated estimate `exp(beta Q)` with the one-step target
//! `exp(beta [r + V_{h+1}(s')])` at rate `alpha_t = (H + 1) / (H + t)`.

use ndarray::Array3;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::dp::{argmax_row, ValueTables};
use crate::error::{Error, Result};
use crate::mdp::{EpisodicMdp, Policy};
use crate::risk::RiskParam;
use crate::rsvi::validate_common;
use crate::ucb::{exp_bonus_scale, neutral_ucb, rs_ucb};

pub const DEFAULT_BONUS_CONST: f64 = 0.1;

/// `alpha_t = (H + 1) / (H + t)` for `t >= 1`.
pub fn learning_rate(t: u64, horizon: usize) -> f64 {
    debug_assert!(t >= 1);
    (horizon as f64 + 1.0) / (horizon as f64 + t as f64)
}

/// Weights of the unrolled update after `t` visits:
/// `alpha_t^0 = prod_{j<=t} (1 - alpha_j)` and
/// `alpha_t^i = alpha_i prod_{i<j<=t} (1 - alpha_j)` for `i = 1..=t`
/// (returned at index `i - 1`).
pub fn alpha_products(t: u64, horizon: usize) -> (f64, Vec<f64>) {
    let t = t as usize;
    let mut weights = vec![0.0; t];
    // running suffix product of (1 - alpha_j) for j > i
    let mut tail = 1.0;
    for i in (1..=t).rev() {
        let alpha = learning_rate(i as u64, horizon);
        weights[i - 1] = alpha * tail;
        tail *= 1.0 - alpha;
    }
    (tail, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsqConfig {
    /// Number of episodes `K`; fixes `T = K H` in the bonus.
    pub episodes: usize,
    pub delta: f64,
    pub risk: RiskParam,
    /// `c`.
    pub bonus_const: f64,
}

impl RsqConfig {
    pub fn new(episodes: usize, delta: f64, beta: f64) -> Self {
        RsqConfig {
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

/// Everything one update touched, for traces and replay checks.
///
/// In neutral mode `target` and `pre_threshold` are on the value scale
/// instead of the exponentiated one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub step: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// Visit count `t` after the increment.
    pub visit: u64,
    pub alpha: f64,
    /// `b_t` (not yet scaled by `alpha`).
    pub bonus: f64,
    /// `exp(beta [r + V_{h+1}(s')])`.
    pub target: f64,
    /// `w +/- alpha_t b_t` before thresholding.
    pub pre_threshold: f64,
    pub clipped: bool,
    pub q_new: f64,
}

#[derive(Debug, Clone)]
pub struct RsqAgent {
    config: RsqConfig,
    horizon: usize,
    counts: Array3<u64>,
    tables: ValueTables,
    /// `sqrt(H log(SAT/delta))`
    confidence: f64,
    bonus_scale: f64,
}

impl RsqAgent {
    pub fn new(states: usize, actions: usize, horizon: usize, config: RsqConfig) -> Result<Self> {
        validate_common(config.episodes, config.delta, config.bonus_const)?;
        config.risk.check_horizon(horizon)?;
        let t = (config.episodes * horizon) as f64;
        let sat = (states * actions) as f64 * t;
        let confidence = (horizon as f64 * (sat / config.delta).ln()).sqrt();
        let bonus_scale = if config.risk.is_neutral() {
            horizon as f64
        } else {
            exp_bonus_scale(config.risk, horizon)
        };
        Ok(RsqAgent {
            config,
            horizon,
            counts: Array3::zeros((horizon, states, actions)),
            tables: ValueTables::optimistic(horizon, states, actions),
            confidence,
            bonus_scale,
        })
    }

    pub fn config(&self) -> &RsqConfig {
        &self.config
    }

    pub fn tables(&self) -> &ValueTables {
        &self.tables
    }

    pub fn count(&self, h: usize, s: usize, a: usize) -> u64 {
        self.counts[[h, s, a]]
    }

    /// `b_t`. In neutral mode this is the value-scale limit
    /// `c H sqrt(H log(SAT/delta) / t)`.
    pub fn bonus(&self, t: u64) -> f64 {
        self.config.bonus_const * self.bonus_scale * self.confidence / (t as f64).sqrt()
    }

    pub fn act(&self, h: usize, s: usize) -> usize {
        argmax_row(&self.tables.q, h, s).0
    }

    /// Applies the observed transition `(s, a) -> s_next` at step `h`.
    pub fn update(
        &mut self,
        h: usize,
        s: usize,
        a: usize,
        reward: f64,
        s_next: usize,
    ) -> Result<UpdateRecord> {
        let risk = self.config.risk;
        self.counts[[h, s, a]] += 1;
        let t = self.counts[[h, s, a]];
        let alpha = learning_rate(t, self.horizon);
        let bonus = self.bonus(t);
        let cap = (self.horizon - h) as f64;
        let q_old = self.tables.q[[h, s, a]];
        let next_value = self.tables.v[[h + 1, s_next]];
        let (target, out) = if risk.is_neutral() {
            let target = reward + next_value;
            let mean = (1.0 - alpha) * q_old + alpha * target;
            (target, neutral_ucb(mean, alpha * bonus, cap))
        } else {
            let beta = risk.beta();
            let target = (beta * (reward + next_value)).exp();
            let w = (1.0 - alpha) * (beta * q_old).exp() + alpha * target;
            if !w.is_finite() {
                return Err(Error::NumericOverflow("rsq intermediate value"));
            }
            (target, rs_ucb(risk, w, alpha * bonus, cap))
        };
        self.tables.q[[h, s, a]] = out.value;
        self.tables.v[[h, s]] = argmax_row(&self.tables.q, h, s).1;
        Ok(UpdateRecord {
            step: h,
            state: s,
            action: a,
            reward,
            next_state: s_next,
            visit: t,
            alpha,
            bonus,
            target,
            pre_threshold: out.pre_threshold,
            clipped: out.clipped,
            q_new: out.value,
        })
    }

    /// Greedy action at `(h, s)`, one transition drawn from `mdp`, and the
    /// resulting update.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        mdp: &EpisodicMdp,
        h: usize,
        s: usize,
        rng: &mut R,
    ) -> Result<UpdateRecord> {
        let a = self.act(h, s);
        let s_next = mdp.sample_next(h, s, a, rng);
        self.update(h, s, a, mdp.reward(h, s, a), s_next)
    }

    pub fn greedy_policy(&self) -> Policy {
        self.tables.greedy_policy()
    }
}

impl Agent for RsqAgent {
    fn begin_episode(&mut self, _rng: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }

    fn policy(&self) -> Policy {
        self.greedy_policy()
    }

    fn act(&mut self, h: usize, s: usize) -> usize {
        RsqAgent::act(self, h, s)
    }

    fn observe(&mut self, h: usize, s: usize, a: usize, reward: f64, s_next: usize) -> Result<()> {
        self.update(h, s, a, reward, s_next).map(|_| ())
    }

    fn q_estimates(&self) -> Option<&Array3<f64>> {
        Some(&self.tables.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learning_rate_values() {
        for h in 1..20 {
            assert_eq!(learning_rate(1, h), 1.0);
        }
        assert!((learning_rate(2, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((learning_rate(91, 9) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn alpha_products_small_cases() {
        let (a0, w) = alpha_products(0, 4);
        assert_eq!(a0, 1.0);
        assert!(w.is_empty());
        let (a0, w) = alpha_products(2, 1);
        assert_eq!(a0, 0.0);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn first_visit_forgets_initial_value() {
        let cfg = RsqConfig::new(10, 0.1, 0.7);
        let mut ag = RsqAgent::new(2, 1, 2, cfg).unwrap();
        let rec = ag.update(0, 0, 0, 0.25, 1).unwrap();
        assert_eq!(rec.alpha, 1.0);
        // V_2 is still optimistic at 1
        assert!((rec.target - (0.7f64 * 1.25).exp()).abs() < 1e-15);
        assert!((rec.pre_threshold - rec.target - rec.bonus).abs() < 1e-12);
    }

    #[test]
    fn averse_floor_gives_cap() {
        let cfg = RsqConfig::new(10, 0.1, -1.0).with_bonus_const(10.0);
        let mut ag = RsqAgent::new(1, 1, 1, cfg).unwrap();
        let rec = ag.update(0, 0, 0, 0.0, 0).unwrap();
        assert!(rec.clipped);
        assert_eq!(rec.q_new, 1.0);
    }

    #[test]
    fn hand_simulated_three_visits() {
        // S = A = H = 1, r = 0.5, beta = 1, c = 0.02, delta = 0.1, K = 50.
        let (c, delta, episodes, beta) = (0.02, 0.1, 50usize, 1.0f64);
        let cfg = RsqConfig::new(episodes, delta, beta).with_bonus_const(c);
        let mut ag = RsqAgent::new(1, 1, 1, cfg).unwrap();
        let iota = (episodes as f64 / delta).ln();
        let target = 0.5f64.exp();
        let mut q = 1.0f64;
        for t in 1..=3u64 {
            let alpha = 2.0 / (1.0 + t as f64);
            let b = c * (beta.exp() - 1.0) * (iota / t as f64).sqrt();
            let w = (1.0 - alpha) * q.exp() + alpha * target;
            q = (beta.exp()).min(w + alpha * b).ln();
            let rec = ag.update(0, 0, 0, 0.5, 0).unwrap();
            assert!((rec.q_new - q).abs() < 1e-12, "t = {t}");
            assert!((rec.q_new - [0.550_656_783_480_958_4, 0.540_964_971_685_905_3, 0.535_278_220_922_059_3][t as usize - 1]).abs() < 1e-12);
        }
        // frozen from an independent evaluation of the three updates
        assert!((q - 0.535_278_220_922_059_3).abs() < 1e-12, "{q}");
    }

    #[test]
    fn value_updates_only_at_visited_state() {
        let cfg = RsqConfig::new(10, 0.1, 0.3);
        let mut ag = RsqAgent::new(2, 2, 2, cfg).unwrap();
        ag.update(0, 0, 0, 0.0, 1).unwrap();
        assert_eq!(ag.tables().value(0, 1), 2.0);
        assert_eq!(ag.count(0, 0, 0), 1);
        assert_eq!(ag.count(0, 1, 0), 0);
    }
}
