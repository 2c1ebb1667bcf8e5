//! Instance generators: the two-arm lower-bound bandit embedded as a
//! 3-state MDP, Dirichlet random MDPs, a chain MDP, and the small
//! risk-preference example.

use ndarray::{Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{EpisodicMdp, InitialStateRule};

pub const DEFAULT_GAP_CONST: f64 = 1.0;

const GAP_TOL: f64 = 1e-12;
const GAP_MAX_ITER: usize = 100;

/// Arm parameters of the lower-bound bandit.
///
/// For `beta > 0`, arm `i` pays `H` with probability `p_i` and `p1 > p2`.
/// For `beta < 0`, arm `i` pays `0` with probability `p_i` (and `H`
/// otherwise) and `p1 < p2`. Arm 1 is the better arm in both cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapResolution {
    pub p1: f64,
    pub p2: f64,
    /// `p1 - p2`; positive for `beta > 0`, negative for `beta < 0`.
    pub delta: f64,
    pub iterations: usize,
}

/// Solves `delta = sign(beta) C sqrt(log K p1 (1 - p1) / K)` with
/// `p1 = p2 + delta` and `p2 = exp(-|beta| H)` by fixed-point iteration
/// from `p1 = p2`, then checks the construction's validity conditions.
pub fn resolve_gap(h_inner: usize, episodes: usize, beta: f64, gap_const: f64) -> Result<GapResolution> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::Domain("the lower-bound instance needs a nonzero beta".into()));
    }
    if h_inner == 0 {
        return Err(Error::InfeasibleConstruction("H must be at least 1".into()));
    }
    if episodes < 3 {
        return Err(Error::InfeasibleConstruction(format!(
            "K = {episodes} is too small, need K >= 3"
        )));
    }
    if !(gap_const > 0.0) {
        return Err(Error::Domain(format!("gap constant must be positive, got {gap_const}")));
    }
    let sign = beta.signum();
    let p2 = (-beta.abs() * h_inner as f64).exp();
    let k = episodes as f64;
    let scale = gap_const * (k.ln() / k).sqrt();
    let mut p1 = p2;
    let mut iterations = 0;
    loop {
        if !(p1 > 0.0 && p1 < 1.0) {
            return Err(Error::InfeasibleConstruction(format!(
                "fixed-point iterate p1 = {p1} left (0, 1)"
            )));
        }
        let next = p2 + sign * scale * (p1 * (1.0 - p1)).sqrt();
        iterations += 1;
        let change = (next - p1).abs();
        p1 = next;
        if change <= GAP_TOL {
            break;
        }
        if iterations >= GAP_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations,
                last_change: change,
            });
        }
    }
    let res = GapResolution {
        p1,
        p2,
        delta: p1 - p2,
        iterations,
    };
    check_construction(&res, beta, h_inner)?;
    Ok(res)
}

fn check_construction(res: &GapResolution, beta: f64, h_inner: usize) -> Result<()> {
    let bound = (-beta.abs() * h_inner as f64).exp();
    let fail = |what: String| Err(Error::InfeasibleConstruction(what));
    if beta > 0.0 {
        if !(res.delta > 0.0) {
            return fail(format!("gap {} is not positive", res.delta));
        }
        if res.delta > bound {
            return fail(format!("gap {} exceeds exp(-beta H) = {bound}", res.delta));
        }
        if res.p1 > 0.75 {
            return fail(format!("p1 = {} exceeds 3/4", res.p1));
        }
    } else {
        if !(res.delta < 0.0) {
            return fail(format!("gap {} is not negative", res.delta));
        }
        if res.p1 < 0.5 * bound {
            return fail(format!("p1 = {} is below exp(beta H)/2 = {}", res.p1, 0.5 * bound));
        }
        if 1.0 - res.p1 < 0.25 {
            return fail(format!("1 - p1 = {} is below 1/4", 1.0 - res.p1));
        }
    }
    Ok(())
}

/// Parameters of the lower-bound instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSpec {
    /// Payoff scale `H` of the embedded bandit.
    pub h_inner: usize,
    /// Number of episodes `K` the gap is tuned for.
    pub episodes: usize,
    pub beta: f64,
    pub gap_const: f64,
    pub resolved: GapResolution,
}

impl LowerBoundSpec {
    pub fn new(h_inner: usize, episodes: usize, beta: f64, gap_const: f64) -> Result<Self> {
        let resolved = resolve_gap(h_inner, episodes, beta, gap_const)?;
        Ok(LowerBoundSpec {
            h_inner,
            episodes,
            beta,
            gap_const,
            resolved,
        })
    }

    /// Probabilities of landing in the rewarding state under `(a1, a2)`.
    pub fn success_probs(&self) -> (f64, f64) {
        let GapResolution { p1, p2, .. } = self.resolved;
        if self.beta > 0.0 {
            (p1, p2)
        } else {
            (1.0 - p1, 1.0 - p2)
        }
    }

    /// Per-episode value lost by pulling arm 2:
    /// `(1/beta) log[(q1 e^{beta H} + 1 - q1) / (q2 e^{beta H} + 1 - q2)]`
    /// with `q_i` the success probabilities.
    pub fn closed_form_gap(&self) -> f64 {
        let (q1, q2) = self.success_probs();
        let e = (self.beta * self.h_inner as f64).exp();
        ((q1 * e + 1.0 - q1) / (q2 * e + 1.0 - q2)).ln() / self.beta
    }
}

/// The bandit as a 3-state, 2-action MDP of horizon `H + 2`.
///
/// State 0 is the start, state 1 the rewarding absorbing state and state 2
/// the empty absorbing state. At step 0 action `i` moves to state 1 with the
/// arm's success probability. State 1 pays 1 on steps `1..=H` (0-based) and
/// nothing on the final step, so a success is worth exactly `H`. State 0
/// keeps the arm kernel at every step; it is unreachable after step 0 from
/// the fixed start.
pub fn lower_bound_bandit(spec: &LowerBoundSpec) -> Result<EpisodicMdp> {
    let h_inner = spec.h_inner;
    let horizon = h_inner + 2;
    let (q1, q2) = spec.success_probs();
    let mut p = Array4::zeros((horizon, 3, 2, 3));
    let mut r = Array3::zeros((horizon, 3, 2));
    for h in 0..horizon {
        for (a, q) in [(0, q1), (1, q2)] {
            p[[h, 0, a, 1]] = q;
            p[[h, 0, a, 2]] = 1.0 - q;
            p[[h, 1, a, 1]] = 1.0;
            p[[h, 2, a, 2]] = 1.0;
            if (1..=h_inner).contains(&h) {
                r[[h, 1, a]] = 1.0;
            }
        }
    }
    EpisodicMdp::new(p, r, InitialStateRule::Fixed(0))
}

/// Exact `KL(Ber(p') || Ber(p))` and the quadratic bound
/// `(p - p')^2 / (p (1 - p))`, for `p > p'` both in `(0, 1)`.
pub fn kl_bernoulli_bound(p: f64, p_prime: f64) -> Result<(f64, f64)> {
    let open = |x: f64| x > 0.0 && x < 1.0;
    if !open(p) || !open(p_prime) {
        return Err(Error::Domain(format!(
            "Bernoulli parameters must lie in (0, 1), got p = {p}, p' = {p_prime}"
        )));
    }
    if p <= p_prime {
        return Err(Error::Domain(format!("need p > p', got p = {p}, p' = {p_prime}")));
    }
    let kl = p_prime * (p_prime / p).ln() + (1.0 - p_prime) * ((1.0 - p_prime) / (1.0 - p)).ln();
    let bound = (p - p_prime).powi(2) / (p * (1.0 - p));
    Ok((kl, bound))
}

/// Random MDP with Dirichlet(`concentration`) kernels and uniform rewards.
pub fn random_mdp(
    states: usize,
    actions: usize,
    horizon: usize,
    seed: u64,
    concentration: f64,
) -> Result<EpisodicMdp> {
    if states == 0 || actions == 0 || horizon == 0 {
        return Err(Error::Shape("S, A and H must all be positive".into()));
    }
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::Domain(format!("concentration {concentration}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Array4::zeros((horizon, states, actions, states));
    for h in 0..horizon {
        for s in 0..states {
            for a in 0..actions {
                let draws: Vec<f64> = (0..states).map(|_| gamma.sample(&mut rng)).collect();
                let total: f64 = draws.iter().sum();
                if total > 0.0 && total.is_finite() {
                    for (s_next, x) in draws.iter().enumerate() {
                        p[[h, s, a, s_next]] = x / total;
                    }
                } else {
                    // every gamma draw underflowed; tiny concentration means a vertex anyway
                    p[[h, s, a, rng.random_range(0..states)]] = 1.0;
                }
            }
        }
    }
    let rewards = Array3::from_shape_fn((horizon, states, actions), |_| rng.random::<f64>());
    EpisodicMdp::new(p, rewards, InitialStateRule::Fixed(0))
}

/// A RiverSwim-style chain of `states` states.
///
/// Action 0 moves left deterministically and pays `0.05` in state 0. Action 1
/// tries to move right, succeeding with `p_forward` and otherwise staying,
/// and pays 1 in the last state.
pub fn chain_mdp(states: usize, horizon: usize, p_forward: f64) -> Result<EpisodicMdp> {
    if states < 2 || horizon == 0 {
        return Err(Error::Shape("chain needs at least 2 states and a positive horizon".into()));
    }
    if !(0.0..=1.0).contains(&p_forward) {
        return Err(Error::Domain(format!("p_forward = {p_forward} is not a probability")));
    }
    let mut p = Array4::zeros((horizon, states, 2, states));
    let mut r = Array3::zeros((horizon, states, 2));
    for h in 0..horizon {
        for s in 0..states {
            p[[h, s, 0, s.saturating_sub(1)]] = 1.0;
            let right = (s + 1).min(states - 1);
            p[[h, s, 1, right]] += p_forward;
            p[[h, s, 1, s]] += 1.0 - p_forward;
        }
        r[[h, 0, 0]] = 0.05;
        r[[h, states - 1, 1]] = 1.0;
    }
    EpisodicMdp::new(p, r, InitialStateRule::Fixed(0))
}

/// Two-step instance whose optimal first action depends on the sign of beta.
///
/// From state 0, action 0 pays 0.6 and moves to the empty state 1; action 1
/// pays nothing and moves to state 1 or the rewarding state 2 with
/// probability 1/2 each. The second step only collects the state reward
/// (1 in state 2). So `Q(0, 0, 0) = 0.6` and
/// `Q(0, 0, 1) = (1/beta) log((1 + e^beta) / 2)`.
pub fn preference_flip() -> EpisodicMdp {
    let mut p = Array4::zeros((2, 3, 2, 3));
    let mut r = Array3::zeros((2, 3, 2));
    p[[0, 0, 0, 1]] = 1.0;
    p[[0, 0, 1, 1]] = 0.5;
    p[[0, 0, 1, 2]] = 0.5;
    r[[0, 0, 0]] = 0.6;
    for a in 0..2 {
        for s in 1..3 {
            p[[0, s, a, s]] = 1.0;
            p[[1, s, a, s]] = 1.0;
        }
        p[[1, 0, a, 0]] = 1.0;
        r[[1, 2, a]] = 1.0;
    }
    EpisodicMdp::new(p, r, InitialStateRule::Fixed(0)).expect("hand-built instance is valid")
}
