use std::path::PathBuf;

/// Errors raised by the library.
///
/// Step indices carried by the validation variants are 1-based (step 1 is
/// the first decision of an episode); state and action indices are 0-based.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("transition kernel at (step {step}, state {state}, action {action}) is not a probability vector (sum = {sum})")]
    NonStochasticKernel {
        step: usize,
        state: usize,
        action: usize,
        sum: f64,
    },

    #[error("reward at (step {step}, state {state}, action {action}) is {value}, outside [0, 1]")]
    RewardOutOfRange {
        step: usize,
        state: usize,
        action: usize,
        value: f64,
    },

    #[error("malformed model: {0}")]
    Shape(String),

    #[error("instance too large to enumerate: {count} trajectories exceeds the limit of {limit}")]
    InstanceTooLarge { count: f64, limit: usize },

    #[error("risk parameter beta = {beta} with horizon {horizon} violates |beta|*(H+1) <= 300")]
    RiskOverflowGuard { beta: f64, horizon: usize },

    #[error("non-finite value while exponentiating ({0})")]
    NumericOverflow(&'static str),

    #[error("infeasible lower-bound construction: {0}")]
    InfeasibleConstruction(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input rather than runtime failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv(_) | Error::NumericOverflow(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
