//! Experiment orchestration and output.
//!
//! Regret is computed exactly: at the start of every episode the agent's
//! greedy policy is evaluated by dynamic programming and compared with the
//! optimal value at that episode's start state. No Monte Carlo estimate is
//! involved, so runs differ only through the sampled transitions.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, FixedPolicyAgent, UniformRandomAgent};
use crate::dp::{evaluate_policy, lambda_factor, solve_optimal, ValueTables};
use crate::envs::{self, LowerBoundSpec};
use crate::error::{Error, Result};
use crate::mdp::EpisodicMdp;
use crate::risk::RiskParam;
use crate::rsq::{RsqAgent, RsqConfig};
use crate::rsvi::{RsviAgent, RsviConfig};

/// Slack allowed when comparing an agent's estimates with `Q*`.
pub const OPTIMISM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Rsvi,
    Rsq,
    Optimal,
    #[serde(alias = "random")]
    UniformRandom,
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rsvi" => Ok(AgentKind::Rsvi),
            "rsq" => Ok(AgentKind::Rsq),
            "optimal" => Ok(AgentKind::Optimal),
            "random" | "uniform-random" => Ok(AgentKind::UniformRandom),
            other => Err(Error::InvalidConfig(format!("unknown agent '{other}'"))),
        }
    }
}

/// Where an experiment's MDP comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    Inline {
        mdp: EpisodicMdp,
    },
    File {
        path: PathBuf,
        #[serde(default)]
        renormalize: bool,
    },
    Random {
        #[serde(rename = "S")]
        states: usize,
        #[serde(rename = "A")]
        actions: usize,
        #[serde(rename = "H")]
        horizon: usize,
        seed: u64,
        #[serde(default = "default_concentration")]
        concentration: f64,
    },
    Chain {
        #[serde(rename = "S")]
        states: usize,
        #[serde(rename = "H")]
        horizon: usize,
        p_forward: f64,
    },
    LowerBound {
        #[serde(rename = "H_inner")]
        h_inner: usize,
        #[serde(rename = "K")]
        episodes: usize,
        beta: f64,
        #[serde(rename = "C", default = "default_gap_const")]
        gap_const: f64,
    },
    PreferenceFlip,
}

fn default_concentration() -> f64 {
    1.0
}

fn default_gap_const() -> f64 {
    envs::DEFAULT_GAP_CONST
}

fn default_bonus_const() -> f64 {
    crate::rsvi::DEFAULT_BONUS_CONST
}

impl EnvSpec {
    pub fn build(&self) -> Result<EpisodicMdp> {
        match self {
            EnvSpec::Inline { mdp } => Ok(mdp.clone()),
            EnvSpec::File { path, renormalize } => EpisodicMdp::load(path, *renormalize),
            EnvSpec::Random {
                states,
                actions,
                horizon,
                seed,
                concentration,
            } => envs::random_mdp(*states, *actions, *horizon, *seed, *concentration),
            EnvSpec::Chain {
                states,
                horizon,
                p_forward,
            } => envs::chain_mdp(*states, *horizon, *p_forward),
            EnvSpec::LowerBound {
                h_inner,
                episodes,
                beta,
                gap_const,
            } => envs::lower_bound_bandit(&LowerBoundSpec::new(*h_inner, *episodes, *beta, *gap_const)?),
            EnvSpec::PreferenceFlip => Ok(envs::preference_flip()),
        }
    }
}

/// A full experiment description; also the JSON config schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub agent: AgentKind,
    #[serde(rename = "K")]
    pub episodes: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub beta: f64,
    /// `c_gamma` for RSVI, `c` for RSQ.
    #[serde(default = "default_bonus_const")]
    pub bonus_const: f64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_delta() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn risk(&self) -> RiskParam {
        RiskParam::new(self.beta)
    }

    /// Checks the config against the environment it will run on.
    pub fn validate(&self, mdp: &EpisodicMdp) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidConfig(format!("delta = {} is outside (0, 1]", self.delta)));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidConfig("beta must be finite".into()));
        }
        if !(self.bonus_const > 0.0 && self.bonus_const.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bonus constant must be positive, got {}",
                self.bonus_const
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        self.risk().check_horizon(mdp.horizon())
    }
}

/// Regret of one episode of one seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub seed: u64,
    /// 1-based episode index.
    pub k: usize,
    pub inst_regret: f64,
    pub cum_regret: f64,
    /// Wall time of the episode in milliseconds.
    pub ms: f64,
}

/// Everything produced by one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<RegretRecord>,
    /// `Q_h^k >= Q_h^*` held at every index at the start of every episode
    /// and after the last one. Always true for agents without estimates.
    pub always_optimistic: bool,
    /// First episode (1-based) at which optimism failed.
    pub first_violation: Option<usize>,
    /// Largest agent estimate seen; must stay within `[0, H]`.
    pub max_estimate: f64,
    pub min_estimate: f64,
}

/// Builds an agent for `mdp`.
pub fn make_agent(
    kind: AgentKind,
    mdp: &EpisodicMdp,
    optimal: &ValueTables,
    config: &ExperimentConfig,
) -> Result<Box<dyn Agent + Send>> {
    let (s, a, h) = (mdp.states(), mdp.actions(), mdp.horizon());
    Ok(match kind {
        AgentKind::Rsvi => {
            let cfg = RsviConfig::new(config.episodes, config.delta, config.beta)
                .with_bonus_const(config.bonus_const);
            Box::new(RsviAgent::new(s, a, h, cfg)?)
        }
        AgentKind::Rsq => {
            let cfg = RsqConfig::new(config.episodes, config.delta, config.beta)
                .with_bonus_const(config.bonus_const);
            Box::new(RsqAgent::new(s, a, h, cfg)?)
        }
        AgentKind::Optimal => Box::new(FixedPolicyAgent::new(optimal.greedy_policy())),
        AgentKind::UniformRandom => Box::new(UniformRandomAgent::new(h, s, a)),
    })
}

/// Runs one seed of `config` on `mdp`, whose optimal tables are `optimal`.
pub fn run_seed(
    mdp: &EpisodicMdp,
    optimal: &ValueTables,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<SeedRun> {
    let risk = config.risk();
    let mut agent = make_agent(config.agent, mdp, optimal, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(config.episodes);
    let mut cum = 0.0;
    let mut tracker = OptimismTracker::new();
    for k in 0..config.episodes {
        let started = Instant::now();
        agent.begin_episode(&mut rng)?;
        if let Some(q) = agent.q_estimates() {
            tracker.check(q, &optimal.q, k + 1);
        }
        let s1 = mdp.initial_state(k, &mut rng);
        let policy = agent.policy();
        let value = evaluate_policy(mdp, &policy, risk)?;
        let inst = optimal.value(0, s1) - value.value(0, s1);
        cum += inst;
        let mut s = s1;
        for h in 0..mdp.horizon() {
            let a = agent.act(h, s);
            let s_next = mdp.sample_next(h, s, a, &mut rng);
            agent.observe(h, s, a, mdp.reward(h, s, a), s_next)?;
            s = s_next;
        }
        records.push(RegretRecord {
            seed,
            k: k + 1,
            inst_regret: inst,
            cum_regret: cum,
            ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    if let Some(q) = agent.q_estimates() {
        tracker.check(q, &optimal.q, config.episodes + 1);
    }
    Ok(SeedRun {
        seed,
        records,
        always_optimistic: tracker.first_violation.is_none(),
        first_violation: tracker.first_violation,
        max_estimate: tracker.max,
        min_estimate: tracker.min,
    })
}

struct OptimismTracker {
    first_violation: Option<usize>,
    max: f64,
    min: f64,
}

impl OptimismTracker {
    fn new() -> Self {
        OptimismTracker {
            first_violation: None,
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
        }
    }

    fn check(&mut self, q: &Array3<f64>, q_star: &Array3<f64>, episode: usize) {
        let horizon = q.dim().0;
        for h in 0..horizon {
            let est = q.index_axis(ndarray::Axis(0), h);
            let opt = q_star.index_axis(ndarray::Axis(0), h);
            for (&x, &y) in est.iter().zip(opt.iter()) {
                self.max = self.max.max(x);
                self.min = self.min.min(x);
                if self.first_violation.is_none() && x < y - OPTIMISM_TOL {
                    self.first_violation = Some(episode);
                }
            }
        }
    }
}

/// Solves the environment once, fans seeds out over the thread pool and
/// merges results in seed order.
pub fn run_detailed(config: &ExperimentConfig) -> Result<Vec<SeedRun>> {
    let mdp = config.env.build()?;
    config.validate(&mdp)?;
    let (optimal, _) = solve_optimal(&mdp, config.risk())?;
    config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(&mdp, &optimal, config, seed))
        .collect()
}

/// All regret records of `config`, seed by seed in config order.
pub fn run(config: &ExperimentConfig) -> Result<Vec<RegretRecord>> {
    Ok(run_detailed(config)?
        .into_iter()
        .flat_map(|r| r.records)
        .collect())
}

/// Which learner's reference curve [`regret_upper_bound`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Rsvi,
    Rsq,
}

/// Upper-bound shape with unit constant:
/// RSVI `lambda(|beta| H^2) sqrt(H^3 S^2 A T log^2(2SAT/delta))`,
/// RSQ `lambda(|beta| H^2) sqrt(H^4 S A T log(SAT/delta))`.
pub fn regret_upper_bound(
    kind: BoundKind,
    states: usize,
    actions: usize,
    horizon: usize,
    total_steps: f64,
    delta: f64,
    beta: f64,
) -> f64 {
    let (s, a, h, t) = (states as f64, actions as f64, horizon as f64, total_steps);
    let lambda = lambda_factor(beta.abs() * h * h);
    match kind {
        BoundKind::Rsvi => {
            let log = (2.0 * s * a * t / delta).ln();
            lambda * (h.powi(3) * s * s * a * t * log * log).sqrt()
        }
        BoundKind::Rsq => {
            let log = (s * a * t / delta).ln();
            lambda * (h.powi(4) * s * a * t * log).sqrt()
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_rows<T: Serialize>(rows: &[T], header: &[&str], path: &Path) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    wtr.write_record(header)?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Writes `seed,k,inst_regret,cum_regret,ms`, one row per record.
pub fn emit_csv(records: &[RegretRecord], path: impl AsRef<Path>) -> Result<()> {
    write_rows(records, &["seed", "k", "inst_regret", "cum_regret", "ms"], path.as_ref())
}

/// Cross-seed summary of cumulative regret at one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub k: usize,
    pub mean: f64,
    /// 5% quantile.
    pub lo: f64,
    /// 95% quantile.
    pub hi: f64,
    pub seeds: usize,
}

/// Mean and central 90% band of cumulative regret per episode.
pub fn aggregate(records: &[RegretRecord]) -> Vec<AggregateRow> {
    let max_k = records.iter().map(|r| r.k).max().unwrap_or(0);
    let mut by_k: Vec<Vec<f64>> = vec![Vec::new(); max_k];
    for r in records {
        by_k[r.k - 1].push(r.cum_regret);
    }
    by_k.into_iter()
        .enumerate()
        .filter(|(_, v)| !v.is_empty())
        .map(|(i, mut v)| {
            v.sort_by(f64::total_cmp);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            AggregateRow {
                k: i + 1,
                mean,
                lo: quantile(&v, 0.05),
                hi: quantile(&v, 0.95),
                seeds: v.len(),
            }
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn emit_aggregate_csv(rows: &[AggregateRow], path: impl AsRef<Path>) -> Result<()> {
    write_rows(rows, &["k", "mean", "lo", "hi", "seeds"], path.as_ref())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    #[serde(rename = "H")]
    pub horizon: usize,
    pub beta: f64,
    pub lambda: f64,
}

/// `lambda(|beta| H^2)` over the grid, `H`-major.
pub fn lambda_curve(horizons: &[usize], betas: &[f64]) -> Vec<LambdaPoint> {
    horizons
        .iter()
        .flat_map(|&h| {
            betas.iter().map(move |&beta| LambdaPoint {
                horizon: h,
                beta,
                lambda: lambda_factor(beta.abs() * (h * h) as f64),
            })
        })
        .collect()
}

/// Writes `H,beta,lambda` rows for plotting the risk-sensitivity factor.
pub fn emit_lambda_curve(horizons: &[usize], betas: &[f64], path: impl AsRef<Path>) -> Result<()> {
    if horizons.is_empty() || betas.is_empty() {
        return Err(Error::InvalidConfig("lambda curve needs non-empty H and beta grids".into()));
    }
    write_rows(&lambda_curve(horizons, betas), &["H", "beta", "lambda"], path.as_ref())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    #[serde(rename = "K")]
    pub episodes: usize,
    #[serde(rename = "T")]
    pub total_steps: usize,
    pub bound: f64,
}

/// Reference curve of [`regret_upper_bound`] at the given episode counts.
pub fn bound_curve(
    kind: BoundKind,
    states: usize,
    actions: usize,
    horizon: usize,
    episodes: &[usize],
    delta: f64,
    beta: f64,
) -> Vec<BoundPoint> {
    episodes
        .iter()
        .map(|&k| {
            let t = k * horizon;
            BoundPoint {
                episodes: k,
                total_steps: t,
                bound: regret_upper_bound(kind, states, actions, horizon, t as f64, delta, beta),
            }
        })
        .collect()
}

pub fn emit_bound_curve(points: &[BoundPoint], path: impl AsRef<Path>) -> Result<()> {
    write_rows(points, &["K", "T", "bound"], path.as_ref())
}

/// Writes a JSON value with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(agent: AgentKind, env: EnvSpec, episodes: usize, beta: f64) -> ExperimentConfig {
        ExperimentConfig {
            env,
            agent,
            episodes,
            delta: 0.1,
            beta,
            bonus_const: 0.1,
            seeds: vec![1, 2],
            output: None,
        }
    }

    fn random_env() -> EnvSpec {
        EnvSpec::Random {
            states: 3,
            actions: 2,
            horizon: 3,
            seed: 5,
            concentration: 1.0,
        }
    }

    #[test]
    fn optimal_agent_has_no_regret() {
        for beta in [-0.5, 0.0, 0.5] {
            let recs = run(&config(AgentKind::Optimal, random_env(), 50, beta)).unwrap();
            assert_eq!(recs.len(), 100);
            assert!(recs.iter().all(|r| r.inst_regret.abs() <= 1e-10));
        }
    }

    #[test]
    fn regret_is_capped_and_nonnegative() {
        for agent in [AgentKind::Rsvi, AgentKind::Rsq, AgentKind::UniformRandom] {
            let cfg = config(agent, random_env(), 200, 0.3);
            for run in run_detailed(&cfg).unwrap() {
                for r in &run.records {
                    assert!(r.inst_regret >= -1e-10);
                    assert!(r.cum_regret <= (r.k * 3) as f64);
                }
                assert!(run.min_estimate >= 0.0 && run.max_estimate <= 3.0);
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = config(AgentKind::Rsq, random_env(), 100, -0.3);
        let a: Vec<_> = run(&cfg).unwrap().iter().map(|r| (r.k, r.cum_regret)).collect();
        let b: Vec<_> = run(&cfg).unwrap().iter().map(|r| (r.k, r.cum_regret)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let mdp = random_env().build().unwrap();
        let mut cfg = config(AgentKind::Rsvi, random_env(), 10, 0.1);
        assert!(cfg.validate(&mdp).is_ok());
        cfg.delta = 1.5;
        assert!(cfg.validate(&mdp).is_err());
        cfg.delta = 0.1;
        cfg.episodes = 0;
        assert!(cfg.validate(&mdp).is_err());
        cfg.episodes = 10;
        cfg.beta = 100.0;
        assert!(cfg.validate(&mdp).is_err());
        cfg.beta = 0.1;
        cfg.seeds.clear();
        assert!(cfg.validate(&mdp).is_err());
    }

    #[test]
    fn bound_limits_and_ratio() {
        let (s, a, h, t, d) = (3usize, 2usize, 4usize, 4000.0, 0.1);
        let rsvi = regret_upper_bound(BoundKind::Rsvi, s, a, h, t, d, 0.0);
        let log2 = (2.0 * 6.0 * t / d).ln();
        let expected = 3.0 * ((h.pow(3) * s * s * a) as f64 * t * log2 * log2).sqrt();
        assert!((rsvi - expected).abs() < 1e-9 * expected);
        let tiny = regret_upper_bound(BoundKind::Rsvi, s, a, h, t, d, 1e-12);
        assert!((tiny - rsvi).abs() < 1e-6 * rsvi);
        // the two bounds differ by sqrt(H/S) up to their log terms
        let rsq = regret_upper_bound(BoundKind::Rsq, s, a, h, t, d, 0.7);
        let rsvi = regret_upper_bound(BoundKind::Rsvi, s, a, h, t, d, 0.7);
        let log1 = (6.0 * t / d).ln();
        let ratio = (h as f64 / s as f64).sqrt() * log1.sqrt() / log2;
        assert!((rsq / rsvi - ratio).abs() < 1e-12);
    }

    #[test]
    fn lambda_at_h2_beta1() {
        let b = regret_upper_bound(BoundKind::Rsq, 1, 1, 2, 10.0, 0.5, 1.0);
        let lambda = (12f64.exp() - 1.0) / 4.0;
        let expected = lambda * (16.0 * 10.0 * (20f64).ln()).sqrt();
        assert!((b - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn quantiles() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.05), 5.0);
        assert_eq!(quantile(&v, 0.95), 95.0);
        assert_eq!(quantile(&[2.0], 0.95), 2.0);
    }

    #[test]
    fn aggregate_across_seeds() {
        let recs: Vec<RegretRecord> = (0..4u64)
            .flat_map(|seed| {
                (1..=3).map(move |k| RegretRecord {
                    seed,
                    k,
                    inst_regret: 1.0,
                    cum_regret: (k as u64 * (seed + 1)) as f64,
                    ms: 0.0,
                })
            })
            .collect();
        let agg = aggregate(&recs);
        assert_eq!(agg.len(), 3);
        assert_eq!(agg[0].seeds, 4);
        assert!((agg[1].mean - 5.0).abs() < 1e-12);
    }

    #[test]
    fn agent_names() {
        assert_eq!("random".parse::<AgentKind>().unwrap(), AgentKind::UniformRandom);
        assert_eq!("rsq".parse::<AgentKind>().unwrap(), AgentKind::Rsq);
        assert!("ppo".parse::<AgentKind>().is_err());
    }
}
