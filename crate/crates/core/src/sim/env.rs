//! Two-vehicle environment: synchronous stepping, termination and observations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::geometry::normalize_angle;
use super::lidar::{cast_lidar, LIDAR_RANGE, LIDAR_RAYS};
use super::scenario::{ScenarioConfig, Scene};
use super::vehicle::{bicycle_step, ActionCommand, VehicleState};

pub const NUM_AGENTS: usize = 2;
pub const EGO_FEATURES: usize = 6;
pub const OBS_DIM: usize = LIDAR_RAYS + EGO_FEATURES;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    #[default]
    Running,
    ReachGoal,
    Collision,
    OffRoad,
    Timeout,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::ReachGoal => "reach_goal",
            Status::Collision => "collision",
            Status::OffRoad => "off_road",
            Status::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub statuses: [Status; NUM_AGENTS],
    /// Meters remaining to each agent's goal line.
    pub progress: [f64; NUM_AGENTS],
    /// Distance between body centres.
    pub inter_vehicle_distance: f64,
}

/// Normalized observation: 16 lidar ranges in `[0, 1]` followed by six ego features
/// `[speed/v_max, heading error/pi, lateral offset/(width/2), remaining/length, prev steer, prev accel]`.
///
/// Heading error and lateral offset are measured in the agent's own direction of
/// travel, so both agents see mirror-consistent inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub lidar: [f64; LIDAR_RAYS],
    pub ego: [f64; EGO_FEATURES],
}

impl Observation {
    pub fn to_array(&self) -> [f64; OBS_DIM] {
        let mut out = [0.0; OBS_DIM];
        out[..LIDAR_RAYS].copy_from_slice(&self.lidar);
        out[LIDAR_RAYS..].copy_from_slice(&self.ego);
        out
    }
}

/// Meters from the projection of the vehicle position to the agent's goal line,
/// measured along the agent's direction of travel.
pub fn longitudinal_progress(scene: &Scene, state: &VehicleState, agent: usize) -> f64 {
    let s = scene.road.project(&state.position()).s;
    remaining_from_s(scene, s, agent)
}

fn remaining_from_s(scene: &Scene, s: f64, agent: usize) -> f64 {
    Scene::direction(agent) * (scene.goal_s(agent) - s)
}

fn off_road(scene: &Scene, state: &VehicleState) -> bool {
    let half = scene.config.road_width / 2.0;
    let length = scene.road.length();
    state.body().corners().iter().any(|c| {
        let p = scene.road.project(c);
        p.lateral.abs() > half || p.s < 0.0 || p.s > length
    })
}

fn collides(scene: &Scene, state: &VehicleState, other: &VehicleState) -> bool {
    let body = state.body();
    body.overlaps(&other.body())
        || scene
            .config
            .obstacles
            .iter()
            .any(|o| body.overlaps_circle(&o.center, o.radius))
}

/// Evaluates termination for both agents; terminal statuses in `previous` are kept.
/// Priority on simultaneous events: Collision > OffRoad > ReachGoal > Timeout.
pub fn check_termination(
    scene: &Scene,
    states: &[VehicleState; NUM_AGENTS],
    previous: &[Status; NUM_AGENTS],
    step_count: u32,
) -> StepOutcome {
    let mut statuses = *previous;
    for i in 0..NUM_AGENTS {
        if previous[i].is_terminal() {
            continue;
        }
        let state = &states[i];
        let front_s = scene.road.project(&state.front_axle()).s;
        statuses[i] = if collides(scene, state, &states[1 - i]) {
            Status::Collision
        } else if off_road(scene, state) {
            Status::OffRoad
        } else if remaining_from_s(scene, front_s, i) <= 0.0 {
            Status::ReachGoal
        } else if step_count >= scene.config.max_steps {
            Status::Timeout
        } else {
            Status::Running
        };
    }
    StepOutcome {
        statuses,
        progress: [
            longitudinal_progress(scene, &states[0], 0),
            longitudinal_progress(scene, &states[1], 1),
        ],
        inter_vehicle_distance: (states[0].body_center() - states[1].body_center()).norm(),
    }
}

pub fn observe(
    scene: &Scene,
    states: &[VehicleState; NUM_AGENTS],
    agent: usize,
    prev_action: &ActionCommand,
) -> Observation {
    let ego = &states[agent];
    let lidar = cast_lidar(scene, ego, &states[1 - agent]).map(|d| d / LIDAR_RANGE);
    let cfg = &scene.config;
    let proj = scene.road.project(&ego.position());
    let dir = Scene::direction(agent);
    let travel_heading = if agent == 0 { proj.heading } else { proj.heading + PI };
    let heading_err = normalize_angle(ego.heading - travel_heading) / PI;
    let lateral = (dir * proj.lateral / (cfg.road_width / 2.0)).clamp(-1.0, 1.0);
    let remaining = (remaining_from_s(scene, proj.s, agent) / cfg.road_length).clamp(-1.0, 1.0);
    Observation {
        lidar,
        ego: [
            ego.speed / cfg.v_max,
            heading_err,
            lateral,
            remaining,
            prev_action.steer,
            prev_action.accel,
        ],
    }
}

/// Result of one synchronous environment step.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub states: [VehicleState; NUM_AGENTS],
    pub observations: [Observation; NUM_AGENTS],
    pub outcome: StepOutcome,
}

/// Pure transition: both running vehicles move simultaneously, then termination
/// is checked, then observations are built. Terminal vehicles stay frozen.
/// `step_count` is the index of the step being taken (the first step is 1).
pub fn env_step(
    scene: &Scene,
    states: &[VehicleState; NUM_AGENTS],
    statuses: &[Status; NUM_AGENTS],
    step_count: u32,
    actions: &[ActionCommand; NUM_AGENTS],
) -> StepResult {
    let cfg = &scene.config;
    let mut next = *states;
    for i in 0..NUM_AGENTS {
        if !statuses[i].is_terminal() {
            next[i] = bicycle_step(&states[i], &actions[i].clamped(), cfg.dt, cfg.v_max);
        }
    }
    let outcome = check_termination(scene, &next, statuses, step_count);
    let observations = [
        observe(scene, &next, 0, &actions[0].clamped()),
        observe(scene, &next, 1, &actions[1].clamped()),
    ];
    StepResult {
        states: next,
        observations,
        outcome,
    }
}

/// Stateful wrapper owning one scene and both vehicles.
#[derive(Clone, Debug)]
pub struct Env {
    scene: Scene,
    states: [VehicleState; NUM_AGENTS],
    statuses: [Status; NUM_AGENTS],
    prev_actions: [ActionCommand; NUM_AGENTS],
    step_count: u32,
}

impl Env {
    pub fn new(config: ScenarioConfig) -> Self {
        let scene = Scene::new(config);
        let states = spawn_states(&scene.config);
        Env {
            scene,
            states,
            statuses: [Status::Running; NUM_AGENTS],
            prev_actions: [ActionCommand::default(); NUM_AGENTS],
            step_count: 0,
        }
    }

    /// Starts from explicit vehicle states instead of the spawn poses.
    pub fn with_states(config: ScenarioConfig, states: [VehicleState; NUM_AGENTS]) -> Self {
        let mut env = Env::new(config);
        env.states = states;
        env
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn states(&self) -> &[VehicleState; NUM_AGENTS] {
        &self.states
    }

    pub fn statuses(&self) -> &[Status; NUM_AGENTS] {
        &self.statuses
    }

    pub fn step_count(&self) -> u32 {
        self.step_count
    }

    pub fn is_done(&self) -> bool {
        self.statuses.iter().all(|s| s.is_terminal())
    }

    pub fn progress(&self, agent: usize) -> f64 {
        longitudinal_progress(&self.scene, &self.states[agent], agent)
    }

    pub fn inter_vehicle_distance(&self) -> f64 {
        (self.states[0].body_center() - self.states[1].body_center()).norm()
    }

    pub fn observe(&self, agent: usize) -> Observation {
        observe(&self.scene, &self.states, agent, &self.prev_actions[agent])
    }

    pub fn step(&mut self, actions: [ActionCommand; NUM_AGENTS]) -> StepResult {
        self.step_count += 1;
        let result = env_step(&self.scene, &self.states, &self.statuses, self.step_count, &actions);
        for i in 0..NUM_AGENTS {
            if !self.statuses[i].is_terminal() {
                self.prev_actions[i] = actions[i].clamped();
            }
        }
        self.states = result.states;
        self.statuses = result.outcome.statuses;
        result
    }
}

pub fn spawn_states(config: &ScenarioConfig) -> [VehicleState; NUM_AGENTS] {
    config.spawn_poses.map(|p| VehicleState::new(p.x, p.y, p.heading, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::generate_scenario;

    fn empty_level1() -> ScenarioConfig {
        let mut cfg = generate_scenario(1, 0).unwrap();
        cfg.obstacles.clear();
        cfg
    }

    #[test]
    fn head_on_overlap_is_collision_for_both() {
        let cfg = empty_level1();
        let scene = Scene::new(cfg);
        let a = VehicleState::new(50.0, 0.0, 0.0, 3.0);
        let b = VehicleState::new(54.0, 0.0, PI, 3.0);
        let out = check_termination(&scene, &[a, b], &[Status::Running; 2], 5);
        assert_eq!(out.statuses, [Status::Collision; 2]);
    }

    #[test]
    fn front_axle_just_past_goal() {
        let cfg = empty_level1();
        let scene = Scene::new(cfg);
        let goal = scene.goal_s(0);
        let a = VehicleState::new(goal + 0.01 - 2.8, -1.75, 0.0, 2.0);
        let b = VehicleState::new(20.0, 1.75, PI, 0.0);
        let out = check_termination(&scene, &[a, b], &[Status::Running; 2], 5);
        assert_eq!(out.statuses, [Status::ReachGoal, Status::Running]);
        let a = VehicleState::new(goal - 0.01 - 2.8, -1.75, 0.0, 2.0);
        let out = check_termination(&scene, &[a, b], &[Status::Running; 2], 5);
        assert_eq!(out.statuses[0], Status::Running);
    }

    #[test]
    fn horizon_gives_timeout() {
        let cfg = empty_level1();
        let max = cfg.max_steps;
        let scene = Scene::new(cfg.clone());
        let states = spawn_states(&cfg);
        let out = check_termination(&scene, &states, &[Status::Running; 2], max);
        assert_eq!(out.statuses, [Status::Timeout; 2]);
        let out = check_termination(&scene, &states, &[Status::Running; 2], max - 1);
        assert_eq!(out.statuses, [Status::Running; 2]);
    }

    #[test]
    fn collision_outranks_off_road() {
        let cfg = empty_level1();
        let scene = Scene::new(cfg);
        // both bodies straddle the left edge and overlap each other
        let a = VehicleState::new(40.0, 3.2, 0.0, 1.0);
        let b = VehicleState::new(43.0, 3.2, PI, 1.0);
        let out = check_termination(&scene, &[a, b], &[Status::Running; 2], 1);
        assert_eq!(out.statuses, [Status::Collision; 2]);
        let a = VehicleState::new(40.0, 3.2, 0.0, 1.0);
        let b = VehicleState::new(80.0, -1.0, PI, 1.0);
        let out = check_termination(&scene, &[a, b], &[Status::Running; 2], 1);
        assert_eq!(out.statuses, [Status::OffRoad, Status::Running]);
    }

    #[test]
    fn terminal_statuses_are_kept() {
        let cfg = empty_level1();
        let scene = Scene::new(cfg.clone());
        let states = spawn_states(&cfg);
        let out = check_termination(&scene, &states, &[Status::OffRoad, Status::ReachGoal], 3);
        assert_eq!(out.statuses, [Status::OffRoad, Status::ReachGoal]);
    }

    #[test]
    fn progress_on_goal_line_is_zero_and_straight_arc_length() {
        let cfg = empty_level1();
        let scene = Scene::new(cfg.clone());
        let g = scene.goal_s(0);
        let on_goal = VehicleState::new(g, -1.0, 0.0, 0.0);
        assert!(longitudinal_progress(&scene, &on_goal, 0).abs() < 1e-9);
        let at30 = VehicleState::new(30.0, -1.0, 0.0, 0.0);
        assert!((longitudinal_progress(&scene, &at30, 0) - (g - 30.0)).abs() < 1e-9);
        assert!((longitudinal_progress(&scene, &at30, 1) - (30.0 - scene.goal_s(1))).abs() < 1e-9);
    }

    #[test]
    fn observation_is_normalized() {
        let cfg = generate_scenario(5, 9).unwrap();
        let env = Env::new(cfg);
        for agent in 0..2 {
            let o = env.observe(agent).to_array();
            assert!(o[..LIDAR_RAYS].iter().all(|x| (0.0..=1.0).contains(x)));
            assert!(o.iter().all(|x| (-1.0..=1.0).contains(x)), "{o:?}");
        }
    }

    #[test]
    fn agents_see_mirrored_ego_features_at_spawn() {
        let env = Env::new(empty_level1());
        let (a, b) = (env.observe(0), env.observe(1));
        for k in 0..EGO_FEATURES {
            assert!(
                (a.ego[k] - b.ego[k]).abs() < 1e-9,
                "feature {k}: {} vs {}",
                a.ego[k],
                b.ego[k]
            );
        }
    }

    #[test]
    fn frozen_agents_do_not_move() {
        let mut env = Env::new(empty_level1());
        env.statuses = [Status::Collision, Status::ReachGoal];
        let before = *env.states();
        let cmd = ActionCommand { steer: 0.5, accel: 1.0 };
        let r = env.step([cmd, cmd]);
        assert_eq!(r.states, before);
        assert_eq!(r.outcome.statuses, [Status::Collision, Status::ReachGoal]);
    }
}
