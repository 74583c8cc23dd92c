//! Experiment orchestration: run configs, evaluation metrics, sweeps,
//! cross-evaluation and trajectory export.

mod commands;
mod config;
mod eval;
mod metrics;

pub use commands::{
    checkpoint_path, cmd_cross_eval, cmd_eval, cmd_sweep, cmd_train, export_trajectories, read_episodes, read_eval,
    read_trajectory_csv, CrossEvalRow, EvalOptions, SweepCell, SweepGrid, TrainOutcome, AGENT_NAMES, DEFAULT_ALPHAS,
};
pub use config::{RunConfig, RunSection};
pub use eval::{
    eval_scenario_seeds, evaluate, replay_episode, run_episode, EpisodeRecord, EvalReport, EvalSettings, TrajectoryRow,
};
pub use metrics::{efficiency, MetricsRecord};
