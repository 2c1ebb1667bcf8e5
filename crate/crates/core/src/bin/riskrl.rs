use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use riskrl::dp::solve_optimal;
use riskrl::envs::{self, LowerBoundSpec};
use riskrl::harness::{self, AgentKind, BoundKind, ExperimentConfig};
use riskrl::{EpisodicMdp, Error, Result, RiskParam};

#[derive(Parser)]
#[command(name = "riskrl", version, about = "Risk-sensitive RL in tabular episodic MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact risk-sensitive DP on an MDP file; prints or writes V, Q and the policy as JSON.
    Solve {
        /// MDP JSON file.
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        /// Rescale rows whose sums are off by rounding.
        #[arg(long)]
        renormalize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs an experiment config and writes per-episode regret CSV.
    Run(RunArgs),
    /// Writes a generated MDP as JSON.
    Gen {
        #[command(subcommand)]
        env: GenEnv,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Writes the risk factor lambda(|beta| H^2) over a grid as CSV.
    Lambda {
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        horizons: Vec<usize>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0.01,0.02,0.05,0.1")]
        betas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a regret upper-bound reference curve as CSV.
    Bound {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long = "states", short = 'S')]
        states: usize,
        #[arg(long = "actions", short = 'A')]
        actions: usize,
        #[arg(long = "horizon", short = 'H')]
        horizon: usize,
        /// Episode counts K; T = K H.
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        episodes: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed range `a..b` (half open) or `a..=b`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Bonus constant.
    #[arg(long = "const")]
    bonus_const: Option<f64>,
    #[arg(long, value_enum)]
    agent: Option<AgentArg>,
    #[arg(long = "episodes", short = 'K')]
    episodes: Option<usize>,
    /// Also write the cross-seed mean and 90% band here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenEnv {
    Random {
        #[arg(short = 'S', long)]
        states: usize,
        #[arg(short = 'A', long)]
        actions: usize,
        #[arg(short = 'H', long)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        concentration: f64,
    },
    Chain {
        #[arg(short = 'S', long)]
        states: usize,
        #[arg(short = 'H', long)]
        horizon: usize,
        #[arg(long, default_value_t = 0.8)]
        p_forward: f64,
    },
    LowerBound {
        #[arg(long)]
        h_inner: usize,
        #[arg(short = 'K', long)]
        episodes: usize,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long = "const", default_value_t = envs::DEFAULT_GAP_CONST)]
        gap_const: f64,
    },
    PreferenceFlip,
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentArg {
    Rsvi,
    Rsq,
    Optimal,
    Random,
}

impl From<AgentArg> for AgentKind {
    fn from(a: AgentArg) -> Self {
        match a {
            AgentArg::Rsvi => AgentKind::Rsvi,
            AgentArg::Rsq => AgentKind::Rsq,
            AgentArg::Optimal => AgentKind::Optimal,
            AgentArg::Random => AgentKind::UniformRandom,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Rsvi,
    Rsq,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("bad seed range '{text}', expected a..b or a..=b"));
    let (lo, hi, inclusive) = if let Some((a, b)) = text.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = text.split_once("..") {
        (a, b, false)
    } else {
        let one = text.trim().parse().map_err(|_| bad())?;
        return Ok(vec![one]);
    };
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    let seeds: Vec<u64> = if inclusive { (lo..=hi).collect() } else { (lo..hi).collect() };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn emit_json(value: &serde_json::Value, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => harness::write_json(value, path),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn require_out(out: Option<PathBuf>) -> Result<PathBuf> {
    out.ok_or_else(|| Error::InvalidConfig("--out is required".into()))
}

fn solve(mdp: PathBuf, beta: f64, renormalize: bool, out: Option<PathBuf>) -> Result<()> {
    let mdp = EpisodicMdp::load(mdp, renormalize)?;
    let (tables, policy) = solve_optimal(&mdp, RiskParam::new(beta))?;
    let v: Vec<Vec<f64>> = tables.v.outer_iter().map(|row| row.to_vec()).collect();
    let q: Vec<Vec<Vec<f64>>> = tables
        .q
        .outer_iter()
        .map(|m| m.outer_iter().map(|row| row.to_vec()).collect())
        .collect();
    let report = json!({
        "beta": beta,
        "V": v,
        "Q": q,
        "policy": policy.table(),
    });
    emit_json(&report, out.as_ref())
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(s) = &args.seeds {
        config.seeds = parse_seeds(s)?;
    }
    if let Some(beta) = args.beta {
        config.beta = beta;
    }
    if let Some(delta) = args.delta {
        config.delta = delta;
    }
    if let Some(c) = args.bonus_const {
        config.bonus_const = c;
    }
    if let Some(agent) = args.agent {
        config.agent = agent.into();
    }
    if let Some(k) = args.episodes {
        config.episodes = k;
    }
    let out = require_out(args.out.or(config.output.clone()))?;
    let records = harness::run(&config)?;
    harness::emit_csv(&records, &out)?;
    if let Some(path) = args.summary {
        harness::emit_aggregate_csv(&harness::aggregate(&records), path)?;
    }
    eprintln!(
        "{} records for {} seeds, bonus constant {}, written to {}",
        records.len(),
        config.seeds.len(),
        config.bonus_const,
        out.display()
    );
    Ok(())
}

fn gen(env: GenEnv, out: Option<PathBuf>) -> Result<()> {
    let mdp = match env {
        GenEnv::Random {
            states,
            actions,
            horizon,
            seed,
            concentration,
        } => envs::random_mdp(states, actions, horizon, seed, concentration)?,
        GenEnv::Chain {
            states,
            horizon,
            p_forward,
        } => envs::chain_mdp(states, horizon, p_forward)?,
        GenEnv::LowerBound {
            h_inner,
            episodes,
            beta,
            gap_const,
        } => envs::lower_bound_bandit(&LowerBoundSpec::new(h_inner, episodes, beta, gap_const)?)?,
        GenEnv::PreferenceFlip => envs::preference_flip(),
    };
    match out {
        Some(path) => mdp.save(path),
        None => {
            println!("{}", mdp.to_json_string()?);
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            mdp,
            beta,
            renormalize,
            out,
        } => solve(mdp, beta, renormalize, out),
        Command::Run(args) => run(args),
        Command::Gen { env, out } => gen(env, out),
        Command::Lambda { horizons, betas, out } => {
            harness::emit_lambda_curve(&horizons, &betas, require_out(out)?)
        }
        Command::Bound {
            kind,
            states,
            actions,
            horizon,
            episodes,
            delta,
            beta,
            out,
        } => {
            if states == 0 || actions == 0 || horizon == 0 || episodes.contains(&0) {
                return Err(Error::InvalidConfig("S, A, H and K must be positive".into()));
            }
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::InvalidConfig(format!("delta = {delta} is outside (0, 1]")));
            }
            let kind = match kind {
                KindArg::Rsvi => BoundKind::Rsvi,
                KindArg::Rsq => BoundKind::Rsq,
            };
            let points = harness::bound_curve(kind, states, actions, horizon, &episodes, delta, beta);
            harness::emit_bound_curve(&points, require_out(out)?)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors itself
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("a..b").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
