//! Tabular episodic MDP model: storage, validation, sampling and exhaustive
//! trajectory enumeration for tiny instances.
//!
//! Steps are 0-based in the API (`0..horizon`), so step `h` here is step
//! `h + 1` in the usual 1-based episode numbering. Value tables carry one
//! extra terminal step at index `horizon`.

use std::fs;
use std::path::Path;

use ndarray::{Array3, Array4, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance used by [`validate`].
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Upper limit on the number of state sequences [`enumerate_trajectories`]
/// is willing to walk.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// How the environment picks the first state of each episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateRule {
    Fixed(usize),
    /// Episode `k` (0-based) starts in state `k mod S`.
    Cyclic,
    /// Uniform draw from the caller's random stream.
    SeededRandom,
}

impl Default for InitialStateRule {
    fn default() -> Self {
        InitialStateRule::Fixed(0)
    }
}

/// A finite-horizon MDP with deterministic rewards in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct EpisodicMdp {
    states: usize,
    actions: usize,
    horizon: usize,
    /// `[h, s, a, s']`
    transitions: Array4<f64>,
    /// `[h, s, a]`
    rewards: Array3<f64>,
    initial_state_rule: InitialStateRule,
}

impl EpisodicMdp {
    /// Builds and validates a model from dense tensors.
    pub fn new(
        transitions: Array4<f64>,
        rewards: Array3<f64>,
        initial_state_rule: InitialStateRule,
    ) -> Result<Self> {
        let (h, s, a, s2) = transitions.dim();
        if h == 0 || s == 0 || a == 0 {
            return Err(Error::Shape("S, A and H must all be positive".into()));
        }
        if s2 != s {
            return Err(Error::Shape(format!(
                "kernel tensor has {s2} next states but {s} states"
            )));
        }
        if rewards.dim() != (h, s, a) {
            return Err(Error::Shape(format!(
                "reward tensor has shape {:?}, expected {:?}",
                rewards.dim(),
                (h, s, a)
            )));
        }
        if let InitialStateRule::Fixed(s0) = initial_state_rule {
            if s0 >= s {
                return Err(Error::Shape(format!(
                    "fixed initial state {s0} out of range for {s} states"
                )));
            }
        }
        let mdp = EpisodicMdp {
            states: s,
            actions: a,
            horizon: h,
            transitions,
            rewards,
            initial_state_rule,
        };
        validate(&mdp)?;
        Ok(mdp)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state_rule(&self) -> InitialStateRule {
        self.initial_state_rule
    }

    pub fn with_initial_state_rule(mut self, rule: InitialStateRule) -> Result<Self> {
        if let InitialStateRule::Fixed(s0) = rule {
            if s0 >= self.states {
                return Err(Error::Shape(format!(
                    "fixed initial state {s0} out of range for {} states",
                    self.states
                )));
            }
        }
        self.initial_state_rule = rule;
        Ok(self)
    }

    /// `P_h(s' | s, a)`.
    #[inline]
    pub fn prob(&self, h: usize, s: usize, a: usize, s_next: usize) -> f64 {
        self.transitions[[h, s, a, s_next]]
    }

    /// The distribution `P_h(. | s, a)`.
    #[inline]
    pub fn kernel(&self, h: usize, s: usize, a: usize) -> ArrayView1<'_, f64> {
        self.transitions.slice(ndarray::s![h, s, a, ..])
    }

    #[inline]
    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.rewards[[h, s, a]]
    }

    pub fn transitions(&self) -> &Array4<f64> {
        &self.transitions
    }

    pub fn rewards(&self) -> &Array3<f64> {
        &self.rewards
    }

    /// Start state for 0-based episode `episode`.
    pub fn initial_state<R: Rng + ?Sized>(&self, episode: usize, rng: &mut R) -> usize {
        match self.initial_state_rule {
            InitialStateRule::Fixed(s) => s,
            InitialStateRule::Cyclic => episode % self.states,
            InitialStateRule::SeededRandom => rng.random_range(0..self.states),
        }
    }

    /// Draws `s' ~ P_h(. | s, a)` by inverse-CDF on one uniform variate.
    pub fn sample_next<R: Rng + ?Sized>(&self, h: usize, s: usize, a: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let row = self.kernel(h, s, a);
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (s_next, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_positive = s_next;
                if u < acc {
                    return s_next;
                }
            }
        }
        // u landed in the rounding gap above the cumulative sum
        last_positive
    }

    pub fn from_json_str(text: &str, renormalize: bool) -> Result<Self> {
        let mut doc: MdpDocument = serde_json::from_str(text)?;
        if renormalize {
            doc.renormalize();
        }
        EpisodicMdp::try_from(doc)
    }

    pub fn load(path: impl AsRef<Path>, renormalize: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, renormalize)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()?).map_err(|e| Error::io(path, e))
    }
}

/// Checks row-stochasticity of every kernel and the reward range.
///
/// Reports the first offending `(step, state, action)` in step-major order,
/// with a 1-based step index.
pub fn validate(mdp: &EpisodicMdp) -> Result<()> {
    for h in 0..mdp.horizon {
        for s in 0..mdp.states {
            for a in 0..mdp.actions {
                let row = mdp.kernel(h, s, a);
                let sum: f64 = row.sum();
                let nonneg = row.iter().all(|&p| p >= 0.0 && p.is_finite());
                if !nonneg || (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::NonStochasticKernel {
                        step: h + 1,
                        state: s,
                        action: a,
                        sum,
                    });
                }
                let r = mdp.reward(h, s, a);
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::RewardOutOfRange {
                        step: h + 1,
                        state: s,
                        action: a,
                        value: r,
                    });
                }
            }
        }
    }
    Ok(())
}

/// A deterministic Markov policy: one action per `(step, state)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    actions: Vec<Vec<usize>>,
}

impl Policy {
    /// The policy that always plays action 0.
    pub fn zeros(horizon: usize, states: usize) -> Self {
        Policy {
            actions: vec![vec![0; states]; horizon],
        }
    }

    /// Wraps an `[H][S]` action table, checking indices against `num_actions`.
    pub fn from_table(actions: Vec<Vec<usize>>, num_actions: usize) -> Result<Self> {
        for (h, row) in actions.iter().enumerate() {
            if let Some(s) = row.iter().position(|&a| a >= num_actions) {
                return Err(Error::Shape(format!(
                    "policy action {} at (step {}, state {s}) exceeds {num_actions} actions",
                    row[s],
                    h + 1
                )));
            }
        }
        Ok(Policy { actions })
    }

    pub fn uniform_random<R: Rng + ?Sized>(
        horizon: usize,
        states: usize,
        actions: usize,
        rng: &mut R,
    ) -> Self {
        let actions = (0..horizon)
            .map(|_| (0..states).map(|_| rng.random_range(0..actions)).collect())
            .collect();
        Policy { actions }
    }

    #[inline]
    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h][s]
    }

    pub fn set(&mut self, h: usize, s: usize, a: usize) {
        self.actions[h][s] = a;
    }

    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.actions
    }

    /// True if the policy has the right shape and valid actions for `mdp`.
    pub fn fits(&self, mdp: &EpisodicMdp) -> bool {
        self.actions.len() == mdp.horizon()
            && self
                .actions
                .iter()
                .all(|row| row.len() == mdp.states() && row.iter().all(|&a| a < mdp.actions()))
    }
}

/// One decision inside an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub step: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Transition>,
    pub total_reward: f64,
}

/// Rolls one full episode of `policy` from `start`.
pub fn sample_episode<R: Rng + ?Sized>(
    mdp: &EpisodicMdp,
    policy: &Policy,
    start: usize,
    rng: &mut R,
) -> Trajectory {
    let mut steps = Vec::with_capacity(mdp.horizon);
    let mut total_reward = 0.0;
    let mut s = start;
    for h in 0..mdp.horizon {
        let a = policy.action(h, s);
        let reward = mdp.reward(h, s, a);
        let next_state = mdp.sample_next(h, s, a, rng);
        total_reward += reward;
        steps.push(Transition {
            step: h,
            state: s,
            action: a,
            reward,
            next_state,
        });
        s = next_state;
    }
    Trajectory {
        steps,
        total_reward,
    }
}

/// Every positive-probability path of `policy` from `(h_start, s_start)`,
/// as `(probability, reward collected from h_start onward)`.
///
/// Fails with [`Error::InstanceTooLarge`] when `S^(H - h_start)` exceeds
/// [`ENUMERATION_LIMIT`].
pub fn enumerate_trajectories(
    mdp: &EpisodicMdp,
    policy: &Policy,
    s_start: usize,
    h_start: usize,
) -> Result<Vec<(f64, f64)>> {
    let remaining = mdp.horizon.saturating_sub(h_start);
    let count = (mdp.states as f64).powi(remaining as i32);
    if count > ENUMERATION_LIMIT as f64 {
        return Err(Error::InstanceTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut out = Vec::new();
    walk(mdp, policy, h_start, s_start, 1.0, 0.0, &mut out);
    Ok(out)
}

fn walk(
    mdp: &EpisodicMdp,
    policy: &Policy,
    h: usize,
    s: usize,
    prob: f64,
    reward: f64,
    out: &mut Vec<(f64, f64)>,
) {
    if h >= mdp.horizon {
        out.push((prob, reward));
        return;
    }
    let a = policy.action(h, s);
    let r = reward + mdp.reward(h, s, a);
    for (s_next, &p) in mdp.kernel(h, s, a).iter().enumerate() {
        if p > 0.0 {
            walk(mdp, policy, h + 1, s_next, prob * p, r, out);
        }
    }
}

/// On-disk JSON layout of an [`EpisodicMdp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpDocument {
    #[serde(rename = "S")]
    pub states: usize,
    #[serde(rename = "A")]
    pub actions: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    /// `[H][S][A][S]`
    #[serde(rename = "P")]
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[H][S][A]`
    #[serde(rename = "r")]
    pub rewards: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub initial_state_rule: InitialStateRule,
}

impl MdpDocument {
    /// Rescales every kernel row with a positive sum to sum to one.
    pub fn renormalize(&mut self) {
        for row in self.transitions.iter_mut().flatten().flatten() {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 && sum.is_finite() {
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }
    }
}

impl TryFrom<MdpDocument> for EpisodicMdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        let (h, s, a) = (doc.horizon, doc.states, doc.actions);
        let shape_err = |what: &str| Error::Shape(format!("{what} does not match S={s}, A={a}, H={h}"));
        if doc.transitions.len() != h || doc.rewards.len() != h {
            return Err(shape_err("outer dimension of P or r"));
        }
        let mut p_flat = Vec::with_capacity(h * s * a * s);
        for step in &doc.transitions {
            if step.len() != s {
                return Err(shape_err("P state dimension"));
            }
            for state in step {
                if state.len() != a {
                    return Err(shape_err("P action dimension"));
                }
                for row in state {
                    if row.len() != s {
                        return Err(shape_err("P next-state dimension"));
                    }
                    p_flat.extend_from_slice(row);
                }
            }
        }
        let mut r_flat = Vec::with_capacity(h * s * a);
        for step in &doc.rewards {
            if step.len() != s {
                return Err(shape_err("r state dimension"));
            }
            for row in step {
                if row.len() != a {
                    return Err(shape_err("r action dimension"));
                }
                r_flat.extend_from_slice(row);
            }
        }
        let transitions = Array4::from_shape_vec((h, s, a, s), p_flat)
            .map_err(|e| Error::Shape(e.to_string()))?;
        let rewards =
            Array3::from_shape_vec((h, s, a), r_flat).map_err(|e| Error::Shape(e.to_string()))?;
        EpisodicMdp::new(transitions, rewards, doc.initial_state_rule)
    }
}

impl From<EpisodicMdp> for MdpDocument {
    fn from(mdp: EpisodicMdp) -> Self {
        let (h, s, a) = (mdp.horizon, mdp.states, mdp.actions);
        let transitions = (0..h)
            .map(|hh| {
                (0..s)
                    .map(|ss| (0..a).map(|aa| mdp.kernel(hh, ss, aa).to_vec()).collect())
                    .collect()
            })
            .collect();
        let rewards = (0..h)
            .map(|hh| {
                (0..s)
                    .map(|ss| (0..a).map(|aa| mdp.reward(hh, ss, aa)).collect())
                    .collect()
            })
            .collect();
        MdpDocument {
            states: s,
            actions: a,
            horizon: h,
            transitions,
            rewards,
            initial_state_rule: mdp.initial_state_rule,
        }
    }
}
