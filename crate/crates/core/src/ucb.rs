//! Risk-sensitive optimism: turning an exponentiated estimate plus a bonus
//! back into a value on the `[0, cap]` scale.
//!
//! For `beta > 0` the bonus is added to `w ~ E[exp(beta X)]` and the sum is
//! capped at `exp(beta * cap)`. For `beta < 0` it is subtracted and the
//! difference floored at `exp(beta * cap)`. Either way `log` is monotone in
//! the right direction after dividing by `beta`, so the returned value is at
//! least the no-bonus value.

use crate::risk::RiskParam;

/// Result of one RS-UCB transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimistic {
    /// `w + bonus` for `beta > 0`, `w - bonus` for `beta < 0`.
    pub pre_threshold: f64,
    pub value: f64,
    /// The cap (or floor) replaced `pre_threshold`.
    pub clipped: bool,
}

/// Exponentiated-domain update: `(1/beta) log min{exp(beta cap), w + b}` for
/// `beta > 0` and `(1/beta) log max{exp(beta cap), w - b}` for `beta < 0`.
///
/// When the threshold fires the value is exactly `cap`. Must not be called
/// with a neutral `risk`.
pub fn rs_ucb(risk: RiskParam, w: f64, bonus: f64, cap: f64) -> Optimistic {
    debug_assert!(!risk.is_neutral());
    let beta = risk.beta();
    let limit = (beta * cap).exp();
    let (pre_threshold, clipped) = if beta > 0.0 {
        let x = w + bonus;
        (x, x >= limit)
    } else {
        let x = w - bonus;
        (x, x <= limit)
    };
    let value = if clipped {
        cap
    } else {
        (pre_threshold.ln() / beta).clamp(0.0, cap)
    };
    Optimistic {
        pre_threshold,
        value,
        clipped,
    }
}

/// Risk-neutral limit of [`rs_ucb`]: `min{cap, mean + bonus}` with both
/// arguments already on the value scale.
pub fn neutral_ucb(mean: f64, bonus: f64, cap: f64) -> Optimistic {
    let x = mean + bonus;
    let clipped = x >= cap;
    Optimistic {
        pre_threshold: x,
        value: if clipped { cap } else { x.max(0.0) },
        clipped,
    }
}

/// `|exp(beta H) - 1|`, the common bonus scale of both learners.
pub fn exp_bonus_scale(risk: RiskParam, horizon: usize) -> f64 {
    (risk.beta() * horizon as f64).exp_m1().abs()
}
