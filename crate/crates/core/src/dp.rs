//! Exact dynamic programming for the exponential-utility Bellman equations.
//!
//! Next-step values enter through the log-expected-exponential operator
//! [`lse_beta`] instead of a plain expectation, so both the optimality and
//! the policy-evaluation recursions are non-linear in the values.

use ndarray::{Array2, Array3};

use crate::error::Result;
use crate::mdp::{enumerate_trajectories, EpisodicMdp, Policy};
use crate::risk::RiskParam;

/// Per-step value and action-value tables, sized `H + 1` with an all-zero
/// terminal step at index `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    /// `[h, s]`
    pub v: Array2<f64>,
    /// `[h, s, a]`
    pub q: Array3<f64>,
}

impl ValueTables {
    pub fn zeros(horizon: usize, states: usize, actions: usize) -> Self {
        ValueTables {
            v: Array2::zeros((horizon + 1, states)),
            q: Array3::zeros((horizon + 1, states, actions)),
        }
    }

    /// Tables filled with the largest attainable value `H - h` at 0-based
    /// step `h` (zero at the terminal step).
    pub fn optimistic(horizon: usize, states: usize, actions: usize) -> Self {
        let mut t = ValueTables::zeros(horizon, states, actions);
        for h in 0..horizon {
            let cap = (horizon - h) as f64;
            t.v.row_mut(h).fill(cap);
            t.q.index_axis_mut(ndarray::Axis(0), h).fill(cap);
        }
        t
    }

    pub fn horizon(&self) -> usize {
        self.v.nrows() - 1
    }

    #[inline]
    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.v[[h, s]]
    }

    #[inline]
    pub fn action_value(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[[h, s, a]]
    }

    /// Greedy policy in `q`, lowest action index on ties.
    pub fn greedy_policy(&self) -> Policy {
        let (h1, states, _) = self.q.dim();
        let mut pi = Policy::zeros(h1 - 1, states);
        for h in 0..h1 - 1 {
            for s in 0..states {
                pi.set(h, s, argmax_row(&self.q, h, s).0);
            }
        }
        pi
    }
}

/// `(argmax, max)` of `q[h, s, .]`, first index wins ties.
#[inline]
pub(crate) fn argmax_row(q: &Array3<f64>, h: usize, s: usize) -> (usize, f64) {
    let mut best = (0, q[[h, s, 0]]);
    for a in 1..q.dim().2 {
        let x = q[[h, s, a]];
        if x > best.1 {
            best = (a, x);
        }
    }
    best
}

/// `(1/beta) log sum_i w_i exp(beta v_i)`, or `sum_i w_i v_i` when `risk`
/// is neutral.
///
/// The exponent is shifted by the largest `beta * v_i` on the support of
/// `weights`, and the sum is accumulated as `expm1` terms so that small
/// `|beta|` does not lose the first-order term to cancellation. The result
/// is clamped to the range of `values` on the support.
pub fn lse_beta(weights: &[f64], values: &[f64], risk: RiskParam) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    if risk.is_neutral() {
        return weights.iter().zip(values).map(|(w, v)| w * v).sum();
    }
    let beta = risk.beta();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&w, &v) in weights.iter().zip(values) {
        if w > 0.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        // no support
        return f64::NAN;
    }
    let pivot = if beta > 0.0 { hi } else { lo };
    let shifted: f64 = weights
        .iter()
        .zip(values)
        .filter(|(&w, _)| w > 0.0)
        .map(|(w, v)| w * (beta * (v - pivot)).exp_m1())
        .sum();
    (pivot + shifted.ln_1p() / beta).clamp(lo, hi)
}

/// Backward induction on the optimality equations.
///
/// Returns the optimal tables and the greedy policy (lowest index on ties).
pub fn solve_optimal(mdp: &EpisodicMdp, risk: RiskParam) -> Result<(ValueTables, Policy)> {
    risk.check_horizon(mdp.horizon())?;
    let (horizon, states, actions) = (mdp.horizon(), mdp.states(), mdp.actions());
    let mut t = ValueTables::zeros(horizon, states, actions);
    let mut pi = Policy::zeros(horizon, states);
    for h in (0..horizon).rev() {
        let next = t.v.row(h + 1).to_vec();
        for s in 0..states {
            for a in 0..actions {
                let kernel = mdp.kernel(h, s, a);
                let cont = lse_beta(kernel.as_slice().expect("contiguous kernel row"), &next, risk);
                t.q[[h, s, a]] = mdp.reward(h, s, a) + cont;
            }
            let (a_star, v) = argmax_row(&t.q, h, s);
            t.v[[h, s]] = v;
            pi.set(h, s, a_star);
        }
    }
    Ok((t, pi))
}

/// Exact value of a fixed deterministic policy.
///
/// `q` is filled for every action (the value of deviating once at step `h`
/// and following `policy` afterwards).
pub fn evaluate_policy(mdp: &EpisodicMdp, policy: &Policy, risk: RiskParam) -> Result<ValueTables> {
    risk.check_horizon(mdp.horizon())?;
    let (horizon, states, actions) = (mdp.horizon(), mdp.states(), mdp.actions());
    let mut t = ValueTables::zeros(horizon, states, actions);
    for h in (0..horizon).rev() {
        let next = t.v.row(h + 1).to_vec();
        for s in 0..states {
            for a in 0..actions {
                let kernel = mdp.kernel(h, s, a);
                let cont = lse_beta(kernel.as_slice().expect("contiguous kernel row"), &next, risk);
                t.q[[h, s, a]] = mdp.reward(h, s, a) + cont;
            }
            t.v[[h, s]] = t.q[[h, s, policy.action(h, s)]];
        }
    }
    Ok(t)
}

/// Value of `policy` at `(h, s)` straight from the definition: enumerate
/// every trajectory and take `(1/beta) log E[exp(beta * total reward)]`.
///
/// Independent of the recursion in [`evaluate_policy`]; meant as its
/// oracle on tiny instances.
pub fn brute_force_value(
    mdp: &EpisodicMdp,
    policy: &Policy,
    risk: RiskParam,
    s: usize,
    h: usize,
) -> Result<f64> {
    let paths = enumerate_trajectories(mdp, policy, s, h)?;
    if risk.is_neutral() {
        return Ok(paths.iter().map(|(p, r)| p * r).sum());
    }
    let beta = risk.beta();
    let shift = paths
        .iter()
        .map(|(_, r)| beta * r)
        .fold(f64::NEG_INFINITY, f64::max);
    let mgf: f64 = paths.iter().map(|(p, r)| p * (beta * r - shift).exp()).sum();
    Ok((shift + mgf.ln()) / beta)
}

/// `lambda(u) = (exp(3u) - 1) / u`, with the limit 3 at `u = 0`.
pub fn lambda_factor(u: f64) -> f64 {
    debug_assert!(u >= 0.0);
    if u == 0.0 {
        3.0
    } else {
        (3.0 * u).exp_m1() / u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::preference_flip;
    use crate::mdp::InitialStateRule;
    use ndarray::{Array3 as A3, Array4};

    #[test]
    fn lse_delta_weight() {
        for beta in [-3.0, -0.1, 0.0, 0.7, 5.0] {
            let v = lse_beta(&[0.0, 1.0, 0.0], &[0.3, 0.8, 2.0], RiskParam::new(beta));
            assert_eq!(v, 0.8);
        }
    }

    #[test]
    fn lse_closed_forms() {
        let w = [0.5, 0.5];
        let v = [0.0, 1.0];
        let expected = ((1.0 + 1f64.exp()) / 2.0).ln();
        assert!((lse_beta(&w, &v, RiskParam::new(1.0)) - expected).abs() < 1e-15);
        assert!((expected - 0.620115).abs() < 1e-6);
        let averse = -((1.0 + (-1f64).exp()) / 2.0).ln();
        assert!((lse_beta(&w, &v, RiskParam::new(-1.0)) - averse).abs() < 1e-15);
        assert!((averse - 0.379885).abs() < 1e-6);
    }

    #[test]
    fn lse_near_neutral() {
        for beta in [1e-9, -1e-9] {
            let v = lse_beta(&[0.5, 0.5], &[0.0, 1.0], RiskParam::new(beta));
            assert!((v - 0.5).abs() < 1e-6, "{v}");
        }
        assert_eq!(lse_beta(&[0.5, 0.5], &[0.0, 1.0], RiskParam::neutral()), 0.5);
    }

    #[test]
    fn lse_large_beta_is_finite() {
        let v = lse_beta(&[0.25, 0.75], &[0.0, 10.0], RiskParam::new(-29.0));
        assert!(v.is_finite() && (0.0..=10.0).contains(&v));
        let v = lse_beta(&[0.25, 0.75], &[0.0, 10.0], RiskParam::new(29.0));
        assert!((v - (10.0 + 0.75f64.ln() / 29.0)).abs() < 1e-12);
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_factor(0.0), 3.0);
        assert!((lambda_factor(1e-12) - 3.0).abs() < 1e-9);
        assert!((lambda_factor(1.0) - (3f64.exp() - 1.0)).abs() < 1e-12);
        assert!((lambda_factor(1.0) - 19.0855).abs() < 1e-4);
        let grid: Vec<f64> = (1..=50).map(|i| lambda_factor(0.1 * i as f64)).collect();
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constant_reward_gives_remaining_steps() {
        let mut p = Array4::zeros((4, 2, 2, 2));
        for h in 0..4 {
            for s in 0..2 {
                p[[h, s, 0, 0]] = 0.3;
                p[[h, s, 0, 1]] = 0.7;
                p[[h, s, 1, 1 - s]] = 1.0;
            }
        }
        let mdp = EpisodicMdp::new(p, A3::from_elem((4, 2, 2), 1.0), InitialStateRule::Fixed(0)).unwrap();
        for beta in [-2.0, -0.5, 0.0, 0.5, 2.0] {
            let (t, _) = solve_optimal(&mdp, RiskParam::new(beta)).unwrap();
            for h in 0..=4 {
                for s in 0..2 {
                    assert!((t.value(h, s) - (4 - h) as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn preference_flips_with_sign_of_beta() {
        let mdp = preference_flip();
        let (seek, pi_seek) = solve_optimal(&mdp, RiskParam::new(1.0)).unwrap();
        assert!((seek.action_value(0, 0, 1) - 0.620115).abs() < 1e-6);
        assert!((seek.action_value(0, 0, 0) - 0.6).abs() < 1e-12);
        assert_eq!(pi_seek.action(0, 0), 1);
        let (averse, pi_averse) = solve_optimal(&mdp, RiskParam::new(-1.0)).unwrap();
        assert!((averse.action_value(0, 0, 1) - 0.379885).abs() < 1e-6);
        assert_eq!(pi_averse.action(0, 0), 0);
    }

    #[test]
    fn forced_safe_action_value() {
        let mdp = preference_flip();
        let t = evaluate_policy(&mdp, &Policy::zeros(2, 3), RiskParam::new(1.0)).unwrap();
        assert!((t.value(0, 0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn greedy_policy_evaluates_to_optimum() {
        let mdp = preference_flip();
        for beta in [-1.0, 1.0] {
            let risk = RiskParam::new(beta);
            let (opt, pi) = solve_optimal(&mdp, risk).unwrap();
            let ev = evaluate_policy(&mdp, &pi, risk).unwrap();
            for (a, b) in opt.v.iter().zip(ev.v.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_rewards_give_zero_values() {
        let mut mdp_p = Array4::zeros((3, 2, 2, 2));
        mdp_p.fill(0.5);
        let mdp = EpisodicMdp::new(mdp_p, A3::zeros((3, 2, 2)), InitialStateRule::Fixed(0)).unwrap();
        let t = evaluate_policy(&mdp, &Policy::zeros(3, 2), RiskParam::new(-0.7)).unwrap();
        assert!(t.v.iter().chain(t.q.iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn brute_force_on_deterministic_path() {
        let mdp = preference_flip();
        let v = brute_force_value(&mdp, &Policy::zeros(2, 3), RiskParam::new(2.0), 0, 0).unwrap();
        assert!((v - 0.6).abs() < 1e-12);
    }

    #[test]
    fn greedy_ties_pick_lowest_index() {
        let t = ValueTables::optimistic(2, 2, 3);
        assert_eq!(t.greedy_policy(), Policy::zeros(2, 2));
        assert_eq!(t.value(0, 1), 2.0);
        assert_eq!(t.value(2, 1), 0.0);
    }

    #[test]
    fn overflow_guard_is_enforced() {
        let mdp = preference_flip();
        assert!(solve_optimal(&mdp, RiskParam::new(150.0)).is_err());
    }
}
