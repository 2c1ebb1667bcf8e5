//! The exponential-utility risk parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude `beta` is treated as exactly risk-neutral.
pub const NEUTRAL_THRESHOLD: f64 = 1e-10;

/// Largest admissible `|beta| * (H + 1)`; keeps `exp(beta * x)` finite for
/// every value on the `[0, H]` scale.
pub const OVERFLOW_GUARD: f64 = 300.0;

/// Risk parameter `beta` of the objective `(1/beta) log E[exp(beta R)]`.
///
/// `beta > 0` is risk-seeking, `beta < 0` risk-averse. Values with
/// `|beta| < NEUTRAL_THRESHOLD` are flagged neutral and every consumer
/// switches to the expected-reward limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct RiskParam {
    beta: f64,
    neutral: bool,
}

impl RiskParam {
    pub fn new(beta: f64) -> Self {
        assert!(beta.is_finite(), "risk parameter must be finite");
        RiskParam {
            beta,
            neutral: beta.abs() < NEUTRAL_THRESHOLD,
        }
    }

    pub fn neutral() -> Self {
        RiskParam::new(0.0)
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn is_neutral(&self) -> bool {
        self.neutral
    }

    /// Checks the overflow guard for an MDP of horizon `horizon`.
    pub fn check_horizon(&self, horizon: usize) -> Result<()> {
        if self.neutral || self.beta.abs() * (horizon as f64 + 1.0) <= OVERFLOW_GUARD {
            Ok(())
        } else {
            Err(Error::RiskOverflowGuard {
                beta: self.beta,
                horizon,
            })
        }
    }
}

impl From<f64> for RiskParam {
    fn from(beta: f64) -> Self {
        RiskParam::new(beta)
    }
}

impl From<RiskParam> for f64 {
    fn from(r: RiskParam) -> f64 {
        r.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neutral_flag() {
        assert!(RiskParam::new(0.0).is_neutral());
        assert!(RiskParam::new(5e-11).is_neutral());
        assert!(!RiskParam::new(1e-9).is_neutral());
        assert!(!RiskParam::new(-0.3).is_neutral());
    }

    #[test]
    fn overflow_guard() {
        assert!(RiskParam::new(30.0).check_horizon(9).is_ok());
        assert!(RiskParam::new(-30.0).check_horizon(10).is_err());
        assert!(RiskParam::new(0.0).check_horizon(1_000_000).is_ok());
    }
}
