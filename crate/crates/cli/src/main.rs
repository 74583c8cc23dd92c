use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pemn_core::harness::{
    cmd_cross_eval, cmd_eval, cmd_sweep, cmd_train, export_trajectories, EvalOptions, MetricsRecord, RunConfig,
    DEFAULT_ALPHAS,
};
use pemn_core::{AlgorithmVariant, PersonalityParams, ScenarioConfig};

#[derive(Parser)]
#[command(name = "pemn", version, about = "Two-vehicle narrow-road multi-agent training lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy pair and evaluate it.
    Train(Common),
    /// Evaluate a left/right checkpoint pair with mean actions.
    Eval {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train and evaluate every (alpha_left, alpha_right) pair.
    Sweep {
        /// Comma-separated alpha values.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate one ego checkpoint against several background checkpoints.
    CrossEval {
        #[arg(long)]
        ego: PathBuf,
        #[arg(long = "background", required = true)]
        backgrounds: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write recorded evaluation episodes of a run as CSV and JSONL.
    Export {
        /// Run directory containing episodes.jsonl.
        #[arg(long)]
        run: PathBuf,
        /// Episode ids to export; all when omitted.
        #[arg(long = "episode")]
        episodes: Vec<u64>,
        #[arg(long)]
        verbose_rewards: bool,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    level: Option<u8>,
    /// Scenario file replayed in every episode instead of generated scenarios.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    alpha_left: Option<f64>,
    #[arg(long)]
    alpha_right: Option<f64>,
    #[arg(long)]
    variant: Option<AlgorithmVariant>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verbose_rewards: bool,
    /// Environment-step budget (overrides the config file).
    #[arg(long)]
    total_steps: Option<u64>,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.train.seed = s;
        }
        if let Some(l) = self.level {
            cfg.scenario.level = l;
        }
        if let Some(p) = &self.scenario {
            let fixed = ScenarioConfig::load(p)?;
            cfg.scenario.level = fixed.level;
            cfg.scenario.fixed = Some(fixed);
        }
        if let Some(a) = self.alpha_left {
            cfg.train.personalities[0] = PersonalityParams::from_alpha(a).context("--alpha-left")?;
        }
        if let Some(a) = self.alpha_right {
            cfg.train.personalities[1] = PersonalityParams::from_alpha(a).context("--alpha-right")?;
        }
        if let Some(v) = self.variant {
            cfg.train.variant = v;
        }
        if let Some(e) = self.episodes {
            cfg.run.eval_episodes = e;
        }
        if let Some(o) = &self.out {
            cfg.run.out = o.clone();
        }
        if let Some(t) = self.total_steps {
            cfg.train.total_steps = t;
        }
        cfg.run.verbose_rewards |= self.verbose_rewards;
        cfg.validate()?;
        Ok(cfg)
    }

    fn eval_options(&self) -> Result<EvalOptions> {
        let cfg = self.run_config()?;
        Ok(EvalOptions {
            scenario: (self.config.is_some() || self.level.is_some() || self.scenario.is_some())
                .then(|| cfg.scenario.clone()),
            reward: cfg.reward,
            episodes: cfg.run.eval_episodes,
            seed: self.seed.unwrap_or(cfg.run.eval_seed),
            record: cfg.run.record_episodes,
            out: self.out.clone(),
        })
    }
}

fn print_pair(m: &[MetricsRecord; 2]) {
    for (name, r) in ["left", "right"].iter().zip(m) {
        println!(
            "{name:>5}: success {:.3}  collision {:.3}  offroad {:.3}  timeout {:.3}  efficiency {:.5}",
            r.success_rate, r.collision_rate, r.offroad_rate, r.timeout_rate, r.efficiency
        );
    }
}

fn export(run: &Path, episodes: &[u64], verbose: bool) -> Result<()> {
    let files = export_trajectories(run, episodes, verbose)?;
    println!(
        "exported {} episode(s) to {}",
        files.len(),
        run.join("trajectories").display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let cfg = common.run_config()?;
            let out = cmd_train(&cfg)?;
            println!("{} updates, run directory {}", out.updates, out.run_dir.display());
            if let Some(m) = &out.eval {
                print_pair(m);
                if cfg.run.record_episodes {
                    export(&out.run_dir, &[], cfg.run.verbose_rewards)?;
                }
            }
        }
        Command::Eval { left, right, common } => {
            let opts = common.eval_options()?;
            let report = cmd_eval(&left, &right, &opts)?;
            print_pair(&report.metrics);
            if let Some(dir) = &opts.out {
                if !report.episodes.is_empty() {
                    export(dir, &[], common.verbose_rewards)?;
                }
            }
        }
        Command::Sweep { alphas, common } => {
            let cfg = common.run_config()?;
            let alphas = alphas.unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
            let grid = cmd_sweep(&cfg, &alphas)?;
            let failed = grid.cells.iter().filter(|c| c.result.is_err()).count();
            println!(
                "{} cells ({failed} failed), tables in {}",
                grid.cells.len(),
                cfg.run.out.display()
            );
        }
        Command::CrossEval {
            ego,
            backgrounds,
            common,
        } => {
            let opts = common.eval_options()?;
            for row in cmd_cross_eval(&ego, &backgrounds, &opts)? {
                println!(
                    "alpha {:.2}  ego success {:.3}  collision {:.3}  ({})",
                    row.background_alpha, row.ego.success_rate, row.ego.collision_rate, row.background
                );
            }
        }
        Command::Export {
            run,
            episodes,
            verbose_rewards,
        } => export(&run, &episodes, verbose_rewards)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
