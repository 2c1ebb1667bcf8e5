//! Risk-sensitive reinforcement learning in tabular episodic MDPs.
//!
//! The objective is the exponential utility of the episode return,
//! `V = (1/beta) log E[exp(beta * R)]`: risk-seeking for `beta > 0`,
//! risk-averse for `beta < 0`, and the plain expectation in the limit
//! `beta -> 0`.
//!
//! - [`mdp`]: the model, validation, sampling and trajectory enumeration.
//! - [`dp`]: exact non-linear dynamic programming and a brute-force oracle.
//! - [`rsvi`] and [`rsq`]: the two learners with risk-sensitive optimism.
//! - [`envs`]: lower-bound bandit instance and benchmark generators.
//! - [`harness`]: exact-regret experiments, CSV output, reference curves.
//!
//! ```
//! use riskrl::{dp, envs, RiskParam};
//!
//! let mdp = envs::preference_flip();
//! let (seeking, pi) = dp::solve_optimal(&mdp, RiskParam::new(1.0)).unwrap();
//! assert_eq!(pi.action(0, 0), 1);
//! assert!((seeking.value(0, 0) - 0.620115).abs() < 1e-6);
//! ```

pub mod agent;
pub mod dp;
pub mod envs;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod risk;
pub mod rsq;
pub mod rsvi;
pub mod ucb;

pub use agent::Agent;
pub use dp::{ValueTables, lse_beta};
pub use error::{Error, Result};
pub use mdp::{EpisodicMdp, InitialStateRule, Policy, Trajectory};
pub use risk::RiskParam;
pub use rsq::{RsqAgent, RsqConfig};
pub use rsvi::{RsviAgent, RsviConfig};
