//! Training, evaluation, sweep, cross-evaluation and export entry points.
//!
//! Every command writes into a single output directory owned by the caller.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::eval::{evaluate, EpisodeRecord, EvalReport, EvalSettings, TrajectoryRow};
use super::metrics::MetricsRecord;
use crate::marl::{AgentUpdateMetrics, Checkpoint, EnvSpec, Trainer, UpdateMetrics};
use crate::reward::{PersonalityParams, RewardConfig};
use crate::sim::NUM_AGENTS;
use crate::{Error, Result};

pub const AGENT_NAMES: [&str; NUM_AGENTS] = ["left", "right"];

/// Paths and final evaluation of one training run.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub run_dir: PathBuf,
    pub updates: u64,
    pub checkpoints: [PathBuf; NUM_AGENTS],
    /// `None` for a zero-update run.
    pub eval: Option<[MetricsRecord; NUM_AGENTS]>,
}

pub fn checkpoint_path(run_dir: &Path, agent: usize, update: u64) -> PathBuf {
    run_dir
        .join("checkpoints")
        .join(format!("{}_{update:06}.json", AGENT_NAMES[agent]))
}

const METRIC_FIELDS: [&str; 12] = [
    "mean_return",
    "successes",
    "collisions",
    "offroads",
    "timeouts",
    "policy_loss",
    "value_loss",
    "coop_value_loss",
    "entropy",
    "mean_ratio",
    "clip_fraction",
    "approx_kl",
];

fn metrics_csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["update", "env_steps", "episodes", "bound_breaches"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for name in AGENT_NAMES {
        h.extend(METRIC_FIELDS.iter().map(|f| format!("{name}_{f}")));
    }
    h
}

fn agent_metric_values(a: &AgentUpdateMetrics) -> [String; 12] {
    let s = &a.stats;
    [
        a.mean_return.to_string(),
        a.successes.to_string(),
        a.collisions.to_string(),
        a.offroads.to_string(),
        a.timeouts.to_string(),
        s.policy_loss.to_string(),
        s.value_loss.to_string(),
        s.coop_value_loss.to_string(),
        s.entropy.to_string(),
        s.mean_ratio.to_string(),
        s.clip_fraction.to_string(),
        s.approx_kl.to_string(),
    ]
}

fn metrics_csv_row(m: &UpdateMetrics) -> Vec<String> {
    let mut row = vec![
        m.update.to_string(),
        m.env_steps.to_string(),
        m.episodes.to_string(),
        m.bound_breaches.to_string(),
    ];
    for a in &m.agents {
        row.extend(agent_metric_values(a));
    }
    row
}

fn load_backgrounds(paths: &[PathBuf]) -> Result<Vec<crate::nn::GaussianPolicy>> {
    paths.iter().map(|p| Ok(Checkpoint::load(p)?.model.policy)).collect()
}

/// Trains the configured variant for `train.total_steps` and evaluates the result.
///
/// Writes `config.toml`, `metrics.jsonl`, `metrics.csv`, checkpoints (initial,
/// periodic and final) and, when at least one update ran, `eval.json` plus
/// `episodes.jsonl`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let dir = cfg.run.out.clone();
    fs::create_dir_all(&dir)?;
    cfg.save(&dir.join("config.toml"))?;

    let backgrounds = load_backgrounds(&cfg.run.backgrounds)?;
    let mut trainer = Trainer::with_opponents(cfg.train.clone(), cfg.scenario.clone(), cfg.reward, backgrounds)?;
    for agent in 0..NUM_AGENTS {
        trainer.checkpoint(agent).save(&checkpoint_path(&dir, agent, 0))?;
    }
    if cfg.train.num_updates() == 0 {
        return Ok(TrainOutcome {
            checkpoints: [0, 1].map(|a| checkpoint_path(&dir, a, 0)),
            run_dir: dir,
            updates: 0,
            eval: None,
        });
    }

    let mut jsonl = BufWriter::new(File::create(dir.join("metrics.jsonl"))?);
    let mut csv = csv::Writer::from_path(dir.join("metrics.csv"))?;
    csv.write_record(metrics_csv_header())?;
    let every = cfg.run.checkpoint_every;
    trainer.train(|t, m| {
        serde_json::to_writer(&mut jsonl, m)?;
        jsonl.write_all(b"\n")?;
        csv.write_record(metrics_csv_row(m))?;
        let last = t.updates() == t.config().num_updates();
        if last || (every > 0 && t.updates() % every == 0) {
            for agent in 0..NUM_AGENTS {
                t.checkpoint(agent).save(&checkpoint_path(&dir, agent, t.updates()))?;
            }
        }
        Ok(())
    })?;
    jsonl.flush()?;
    csv.flush()?;

    let settings = EvalSettings {
        spec: &cfg.scenario,
        reward: &cfg.reward,
        personalities: cfg.train.personalities,
        episodes: cfg.run.eval_episodes,
        seed: cfg.run.eval_seed,
        record: cfg.run.record_episodes,
    };
    let models = trainer.models();
    let report = evaluate([&models[0].policy, &models[1].policy], &settings)?;
    write_eval(&dir, &report)?;
    Ok(TrainOutcome {
        checkpoints: [0, 1].map(|a| checkpoint_path(&dir, a, trainer.updates())),
        run_dir: dir,
        updates: trainer.updates(),
        eval: Some(report.metrics),
    })
}

#[derive(Serialize, Deserialize)]
struct EvalFile {
    left: MetricsRecord,
    right: MetricsRecord,
}

fn write_eval(dir: &Path, report: &EvalReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = EvalFile {
        left: report.metrics[0].clone(),
        right: report.metrics[1].clone(),
    };
    fs::write(dir.join("eval.json"), serde_json::to_string_pretty(&file)?)?;
    if !report.episodes.is_empty() {
        let mut w = BufWriter::new(File::create(dir.join("episodes.jsonl"))?);
        for e in &report.episodes {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Reads `eval.json` from a run directory.
pub fn read_eval(dir: &Path) -> Result<[MetricsRecord; NUM_AGENTS]> {
    let path = dir.join("eval.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::Load {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let f: EvalFile = serde_json::from_str(&text)?;
    Ok([f.left, f.right])
}

/// Options shared by `eval` and `cross-eval`.
#[derive(Clone, Debug)]
pub struct EvalOptions {
    /// Defaults to the scenario stored in the first checkpoint.
    pub scenario: Option<EnvSpec>,
    pub reward: RewardConfig,
    pub episodes: usize,
    pub seed: u64,
    pub record: bool,
    pub out: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            scenario: None,
            reward: RewardConfig::default(),
            episodes: 100,
            seed: 1_000_000,
            record: false,
            out: None,
        }
    }
}

fn eval_pair(left: &Checkpoint, right: &Checkpoint, opts: &EvalOptions) -> Result<EvalReport> {
    let spec = opts.scenario.clone().unwrap_or_else(|| left.scenario.clone());
    let settings = EvalSettings {
        spec: &spec,
        reward: &opts.reward,
        personalities: [left.personality, right.personality],
        episodes: opts.episodes,
        seed: opts.seed,
        record: opts.record,
    };
    evaluate([&left.model.policy, &right.model.policy], &settings)
}

/// Evaluates a left/right checkpoint pair with deterministic mean actions.
pub fn cmd_eval(left: &Path, right: &Path, opts: &EvalOptions) -> Result<EvalReport> {
    let l = Checkpoint::load(left)?;
    let r = Checkpoint::load(right)?;
    let report = eval_pair(&l, &r, opts)?;
    if let Some(dir) = &opts.out {
        write_eval(dir, &report)?;
    }
    Ok(report)
}

/// One `(alpha_left, alpha_right)` cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub alpha_left: f64,
    pub alpha_right: f64,
    pub result: std::result::Result<[MetricsRecord; NUM_AGENTS], String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub alpha_values: Vec<f64>,
    /// Row-major in `(alpha_left, alpha_right)`.
    pub cells: Vec<SweepCell>,
}

pub const DEFAULT_ALPHAS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

const RECORD_FIELDS: [&str; 13] = [
    "episodes",
    "successes",
    "collisions",
    "offroads",
    "timeouts",
    "success_rate",
    "collision_rate",
    "offroad_rate",
    "timeout_rate",
    "safety",
    "efficiency",
    "total_seconds",
    "mean_episode_seconds",
];

fn record_values(m: &MetricsRecord) -> [String; 13] {
    [
        m.episodes.to_string(),
        m.successes.to_string(),
        m.collisions.to_string(),
        m.offroads.to_string(),
        m.timeouts.to_string(),
        m.success_rate.to_string(),
        m.collision_rate.to_string(),
        m.offroad_rate.to_string(),
        m.timeout_rate.to_string(),
        m.safety.to_string(),
        m.efficiency.to_string(),
        m.total_seconds.to_string(),
        m.mean_episode_seconds.to_string(),
    ]
}

fn parse_field<T: std::str::FromStr>(s: &str, field: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::config(field, format!("cannot parse {s:?}")))
}

fn parse_record(fields: &[&str]) -> Result<MetricsRecord> {
    let f = |i: usize| fields[i];
    Ok(MetricsRecord {
        episodes: parse_field(f(0), "episodes")?,
        successes: parse_field(f(1), "successes")?,
        collisions: parse_field(f(2), "collisions")?,
        offroads: parse_field(f(3), "offroads")?,
        timeouts: parse_field(f(4), "timeouts")?,
        success_rate: parse_field(f(5), "success_rate")?,
        collision_rate: parse_field(f(6), "collision_rate")?,
        offroad_rate: parse_field(f(7), "offroad_rate")?,
        timeout_rate: parse_field(f(8), "timeout_rate")?,
        safety: parse_field(f(9), "safety")?,
        efficiency: parse_field(f(10), "efficiency")?,
        total_seconds: parse_field(f(11), "total_seconds")?,
        mean_episode_seconds: parse_field(f(12), "mean_episode_seconds")?,
    })
}

impl SweepGrid {
    pub fn cell(&self, alpha_left: f64, alpha_right: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.alpha_left == alpha_left && c.alpha_right == alpha_right)
    }

    /// Every pair of the alpha list has a cell, with a record or an error.
    pub fn is_complete(&self) -> bool {
        self.cells.len() == self.alpha_values.len().pow(2)
            && self
                .alpha_values
                .iter()
                .all(|&l| self.alpha_values.iter().all(|&r| self.cell(l, r).is_some()))
    }

    /// Long-format table: `alpha_left, alpha_right, error`, then both agents' records.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["alpha_left".to_string(), "alpha_right".into(), "error".into()];
        for name in AGENT_NAMES {
            header.extend(RECORD_FIELDS.iter().map(|f| format!("{name}_{f}")));
        }
        w.write_record(&header)?;
        for c in &self.cells {
            let mut row = vec![c.alpha_left.to_string(), c.alpha_right.to_string()];
            match &c.result {
                Ok(recs) => {
                    row.push(String::new());
                    for r in recs {
                        row.extend(record_values(r));
                    }
                }
                Err(e) => {
                    row.push(e.clone());
                    row.extend(std::iter::repeat_n(String::new(), 2 * RECORD_FIELDS.len()));
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut cells = Vec::new();
        let mut alphas: Vec<f64> = Vec::new();
        let n = RECORD_FIELDS.len();
        for rec in r.records() {
            let rec = rec?;
            let fields: Vec<&str> = rec.iter().collect();
            if fields.len() != 3 + 2 * n {
                return Err(Error::dims("sweep grid row", 3 + 2 * n, fields.len()));
            }
            let alpha_left: f64 = parse_field(fields[0], "alpha_left")?;
            let alpha_right: f64 = parse_field(fields[1], "alpha_right")?;
            if !alphas.contains(&alpha_left) {
                alphas.push(alpha_left);
            }
            let result = if fields[2].is_empty() {
                Ok([parse_record(&fields[3..3 + n])?, parse_record(&fields[3 + n..])?])
            } else {
                Err(fields[2].to_string())
            };
            cells.push(SweepCell {
                alpha_left,
                alpha_right,
                result,
            });
        }
        Ok(SweepGrid {
            alpha_values: alphas,
            cells,
        })
    }

    fn write_matrix(&self, path: &Path, pick: impl Fn(&MetricsRecord) -> f64) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["alpha_left", "alpha_right", "left", "right", "mean", "error"])?;
        for c in &self.cells {
            let (l, r) = (c.alpha_left.to_string(), c.alpha_right.to_string());
            match &c.result {
                Ok([a, b]) => {
                    let (x, y) = (pick(a), pick(b));
                    w.write_record([
                        l,
                        r,
                        x.to_string(),
                        y.to_string(),
                        (0.5 * (x + y)).to_string(),
                        String::new(),
                    ])?
                }
                Err(e) => w.write_record([l, r, String::new(), String::new(), String::new(), e.clone()])?,
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Mean collision rate of an agent with personality `alpha`: as left agent
    /// (over every right partner), as right agent, and pooled.
    pub fn collision_curves(&self) -> Vec<(f64, f64, f64, f64)> {
        let mean = |v: Vec<f64>| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        self.alpha_values
            .iter()
            .map(|&a| {
                let mut left = Vec::new();
                let mut right = Vec::new();
                for c in &self.cells {
                    if let Ok(m) = &c.result {
                        if c.alpha_left == a {
                            left.push(m[0].collision_rate);
                        }
                        if c.alpha_right == a {
                            right.push(m[1].collision_rate);
                        }
                    }
                }
                let pooled: Vec<f64> = left.iter().chain(&right).copied().collect();
                (a, mean(left), mean(right), mean(pooled))
            })
            .collect()
    }

    /// Writes `sweep_grid.csv`, `sweep_success.csv`, `sweep_collision.csv` and
    /// `sweep_collision_curves.csv` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_csv(&dir.join("sweep_grid.csv"))?;
        self.write_matrix(&dir.join("sweep_success.csv"), |m| m.success_rate)?;
        self.write_matrix(&dir.join("sweep_collision.csv"), |m| m.collision_rate)?;
        let mut w = csv::Writer::from_path(dir.join("sweep_collision_curves.csv"))?;
        w.write_record(["alpha", "as_left", "as_right", "pooled"])?;
        for (a, l, r, p) in self.collision_curves() {
            w.write_record([a.to_string(), l.to_string(), r.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cell_config(base: &RunConfig, alpha_left: f64, alpha_right: f64) -> Result<RunConfig> {
    let mut cfg = base.clone();
    cfg.train.personalities = [
        PersonalityParams::from_alpha(alpha_left)?,
        PersonalityParams::from_alpha(alpha_right)?,
    ];
    cfg.run.out = base.run.out.join("cells").join(format!("l{alpha_left}_r{alpha_right}"));
    Ok(cfg)
}

fn cached_cell(cfg: &RunConfig) -> Option<[MetricsRecord; NUM_AGENTS]> {
    let saved = RunConfig::load(&cfg.run.out.join("config.toml")).ok()?;
    if &saved != cfg {
        return None;
    }
    read_eval(&cfg.run.out).ok()
}

fn run_cell(base: &RunConfig, alpha_left: f64, alpha_right: f64) -> SweepCell {
    let result = cell_config(base, alpha_left, alpha_right).and_then(|cfg| match cached_cell(&cfg) {
        Some(m) => Ok(m),
        None => cmd_train(&cfg)?
            .eval
            .ok_or_else(|| Error::config("train.total_steps", "sweep cells need at least one update")),
    });
    SweepCell {
        alpha_left,
        alpha_right,
        result: result.map_err(|e| e.to_string()),
    }
}

/// Trains (or reuses a cached run for) every `(alpha_left, alpha_right)` pair with
/// `beta = 1 - alpha`, then writes the sweep tables into `base.run.out`.
/// A failing cell is recorded with its error and the sweep continues.
pub fn cmd_sweep(base: &RunConfig, alphas: &[f64]) -> Result<SweepGrid> {
    if alphas.is_empty() {
        return Err(Error::config("alphas", "must not be empty"));
    }
    for &a in alphas {
        PersonalityParams::from_alpha(a)?;
    }
    base.validate()?;
    fs::create_dir_all(&base.run.out)?;
    base.save(&base.run.out.join("sweep_config.toml"))?;
    let pairs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&l| alphas.iter().map(move |&r| (l, r)))
        .collect();
    let cells: Vec<SweepCell> = pairs.par_iter().map(|&(l, r)| run_cell(base, l, r)).collect();
    let grid = SweepGrid {
        alpha_values: alphas.to_vec(),
        cells,
    };
    grid.write_all(&base.run.out)?;
    Ok(grid)
}

/// One background policy's row of a cross-evaluation table.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossEvalRow {
    pub background: String,
    pub background_alpha: f64,
    pub ego: MetricsRecord,
    pub background_metrics: MetricsRecord,
}

/// Evaluates the ego (left) against each background checkpoint (right) and
/// writes `cross_eval.csv` when an output directory is set.
pub fn cmd_cross_eval(ego: &Path, backgrounds: &[PathBuf], opts: &EvalOptions) -> Result<Vec<CrossEvalRow>> {
    if backgrounds.is_empty() {
        return Err(Error::config(
            "backgrounds",
            "at least one background checkpoint is required",
        ));
    }
    let ego_ckpt = Checkpoint::load(ego)?;
    let mut rows = Vec::with_capacity(backgrounds.len());
    for path in backgrounds {
        let bg = Checkpoint::load(path)?;
        let report = eval_pair(&ego_ckpt, &bg, opts)?;
        let [e, b] = report.metrics;
        rows.push(CrossEvalRow {
            background: path.display().to_string(),
            background_alpha: bg.personality.alpha(),
            ego: e,
            background_metrics: b,
        });
    }
    if let Some(dir) = &opts.out {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("cross_eval.csv"))?;
        let mut header = vec!["background".to_string(), "background_alpha".into()];
        for name in ["ego", "background"] {
            header.extend(RECORD_FIELDS.iter().map(|f| format!("{name}_{f}")));
        }
        w.write_record(&header)?;
        for r in &rows {
            let mut row = vec![r.background.clone(), r.background_alpha.to_string()];
            row.extend(record_values(&r.ego));
            row.extend(record_values(&r.background_metrics));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(rows)
}

/// Loads every recorded episode of a run directory.
pub fn read_episodes(run_dir: &Path) -> Result<Vec<EpisodeRecord>> {
    let path = run_dir.join("episodes.jsonl");
    let file = File::open(&path).map_err(|e| Error::Load {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    BufReader::new(file)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect()
}

const TRAJECTORY_FIELDS: [&str; 9] = [
    "step", "agent", "x", "y", "heading", "speed", "steer", "accel", "status",
];
const REWARD_FIELDS: [&str; 6] = ["r_dense", "r_sparse", "r_self", "r_coop", "r_total", "gated"];

/// Writes `trajectories/episode_NNNNNN.{csv,jsonl}` for each selected episode
/// (all of them when `filter` is empty). Returns the CSV paths.
pub fn export_trajectories(run_dir: &Path, filter: &[u64], verbose_rewards: bool) -> Result<Vec<PathBuf>> {
    let episodes = read_episodes(run_dir)?;
    for id in filter {
        if !episodes.iter().any(|e| e.episode == *id) {
            return Err(Error::EpisodeNotFound(*id));
        }
    }
    let out_dir = run_dir.join("trajectories");
    fs::create_dir_all(&out_dir)?;
    let mut written = Vec::new();
    for e in episodes
        .iter()
        .filter(|e| filter.is_empty() || filter.contains(&e.episode))
    {
        let stem = format!("episode_{:06}", e.episode);
        let csv_path = out_dir.join(format!("{stem}.csv"));
        let mut w = csv::Writer::from_path(&csv_path)?;
        let mut header: Vec<&str> = TRAJECTORY_FIELDS.to_vec();
        if verbose_rewards {
            header.extend(REWARD_FIELDS);
        }
        w.write_record(&header)?;
        let mut jl = BufWriter::new(File::create(out_dir.join(format!("{stem}.jsonl")))?);
        for row in &e.rows {
            let mut rec = vec![
                row.step.to_string(),
                row.agent.to_string(),
                row.x.to_string(),
                row.y.to_string(),
                row.heading.to_string(),
                row.speed.to_string(),
                row.steer.to_string(),
                row.accel.to_string(),
                row.status.as_str().to_string(),
            ];
            let mut json_row = row.clone();
            if verbose_rewards {
                let b = row.reward.unwrap_or_default();
                rec.extend([
                    b.r_dense.to_string(),
                    b.r_sparse.to_string(),
                    b.r_self.to_string(),
                    b.r_coop.to_string(),
                    b.r_total.to_string(),
                    b.gated.to_string(),
                ]);
            } else {
                json_row.reward = None;
            }
            w.write_record(&rec)?;
            serde_json::to_writer(&mut jl, &json_row)?;
            jl.write_all(b"\n")?;
        }
        w.flush()?;
        jl.flush()?;
        written.push(csv_path);
    }
    Ok(written)
}

/// Parses an exported trajectory CSV back into rows (reward columns are ignored).
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let status = serde_json::from_str(&format!("\"{}\"", f(8)))?;
        rows.push(TrajectoryRow {
            step: parse_field(f(0), "step")?,
            agent: parse_field(f(1), "agent")?,
            x: parse_field(f(2), "x")?,
            y: parse_field(f(3), "y")?,
            heading: parse_field(f(4), "heading")?,
            speed: parse_field(f(5), "speed")?,
            steer: parse_field(f(6), "steer")?,
            accel: parse_field(f(7), "accel")?,
            status,
            reward: None,
        });
    }
    Ok(rows)
}
