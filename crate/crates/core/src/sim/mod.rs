//! Deterministic two-vehicle narrow-road simulator.

mod env;
pub mod geometry;
mod lidar;
pub mod road;
mod scenario;
mod vehicle;

pub use env::{
    check_termination, env_step, longitudinal_progress, observe, spawn_states, Env, Observation, Status, StepOutcome,
    StepResult, EGO_FEATURES, NUM_AGENTS, OBS_DIM,
};
pub use geometry::{Obb, Vec2};
pub use lidar::{cast_lidar, cast_rays, Occluders, LIDAR_RANGE, LIDAR_RAYS};
pub use road::{Projection, Road, RoadShape};
pub use scenario::{
    generate_scenario, generate_scenario_with, min_free_gap, obstacle_count, GoalLine, Obstacle, Pose, ScenarioConfig,
    ScenarioParams, Scene, MIN_GAP,
};
pub use vehicle::{
    bicycle_step, ActionCommand, VehicleState, MAX_ACCEL, MAX_WHEEL_ANGLE, VEHICLE_LENGTH, VEHICLE_WIDTH, WHEELBASE,
};
