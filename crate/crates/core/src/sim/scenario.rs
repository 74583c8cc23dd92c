//! Scenario description, generation across difficulty levels, and the derived [`Scene`].

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{rotate, Vec2};
use super::road::{Road, RoadShape, CENTERLINE_STEP};
use super::vehicle::VEHICLE_WIDTH;
use crate::{Error, Result};

pub const MIN_LEVEL: u8 = 1;
pub const MAX_LEVEL: u8 = 6;
/// Smallest free lateral corridor every cross-section must keep.
pub const MIN_GAP: f64 = VEHICLE_WIDTH + 0.4;
pub const OBSTACLE_RADIUS_MIN: f64 = 0.5;
pub const OBSTACLE_RADIUS_MAX: f64 = 1.2;
const SPAWN_OFFSET: f64 = 5.0;
const GOAL_OFFSET: f64 = 2.0;
const MIN_OBSTACLE_SPACING: f64 = 3.0;
const PLACEMENT_ATTEMPTS: u32 = 200;
/// Cross-section spacing for the generation-time gap check.
const GAP_CHECK_STEP: f64 = 0.05;

/// Obstacle count for a difficulty level.
pub fn obstacle_count(level: u8) -> Result<usize> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
        return Err(Error::InvalidLevel(level));
    }
    Ok(2 * level as usize)
}

pub fn road_shape(level: u8) -> RoadShape {
    if level <= 3 {
        RoadShape::Straight
    } else {
        RoadShape::SCurve
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// Lateral goal segment at arc length `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalLine {
    pub s: f64,
    pub a: Vec2,
    pub b: Vec2,
}

/// Tunable generation parameters; the defaults are the standard scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub road_length: f64,
    pub road_width: f64,
    pub v_max: f64,
    pub dt: f64,
    pub max_steps: u32,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            road_length: 100.0,
            road_width: 7.0,
            v_max: 8.0,
            dt: 0.1,
            max_steps: 600,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.road_length >= 40.0) {
            return Err(Error::config("scenario.road_length", "must be at least 40 m"));
        }
        if !(self.road_width >= 2.0 * MIN_GAP) {
            return Err(Error::config(
                "scenario.road_width",
                format!("must be at least {} m", 2.0 * MIN_GAP),
            ));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::config("scenario.v_max", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("scenario.dt", "must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("scenario.max_steps", "must be positive"));
        }
        Ok(())
    }
}

/// Everything needed to rebuild one meeting scenario.
///
/// Agent 0 drives towards increasing arc length, agent 1 towards decreasing arc length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub level: u8,
    pub road_length: f64,
    pub road_width: f64,
    pub shape: RoadShape,
    pub centerline: Vec<Vec2>,
    pub obstacles: Vec<Obstacle>,
    pub spawn_poses: [Pose; 2],
    pub goal_lines: [GoalLine; 2],
    pub v_max: f64,
    pub dt: f64,
    pub max_steps: u32,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    /// Structural checks for configs that did not come out of the generator.
    pub fn validate(&self) -> Result<()> {
        obstacle_count(self.level)?;
        let params = ScenarioParams {
            road_length: self.road_length,
            road_width: self.road_width,
            v_max: self.v_max,
            dt: self.dt,
            max_steps: self.max_steps,
        };
        params.validate()?;
        if self.centerline.len() < 2 {
            return Err(Error::config("scenario.centerline", "needs at least two points"));
        }
        if self.centerline.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::config("scenario.centerline", "points must be finite"));
        }
        for o in &self.obstacles {
            if !(o.radius > 0.0) || !o.center.x.is_finite() || !o.center.y.is_finite() {
                return Err(Error::config(
                    "scenario.obstacles",
                    "need a finite center and positive radius",
                ));
            }
        }
        let finite_pose = |p: &Pose| p.x.is_finite() && p.y.is_finite() && p.heading.is_finite();
        if !self.spawn_poses.iter().all(finite_pose) {
            return Err(Error::config("scenario.spawn_poses", "must be finite"));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        fs::read_to_string(path)
            .map_err(Error::from)
            .and_then(|text| Self::from_toml(&text))
            .map_err(|e| Error::Load {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    /// Applies a rigid rotation about the origin followed by a translation.
    pub fn transformed(&self, angle: f64, offset: Vec2) -> ScenarioConfig {
        let tf = |p: &Vec2| rotate(p, angle) + offset;
        let mut out = self.clone();
        out.centerline = self.centerline.iter().map(tf).collect();
        for o in &mut out.obstacles {
            o.center = tf(&o.center);
        }
        for p in &mut out.spawn_poses {
            let q = tf(&Vec2::new(p.x, p.y));
            *p = Pose {
                x: q.x,
                y: q.y,
                heading: super::geometry::normalize_angle(p.heading + angle),
            };
        }
        for g in &mut out.goal_lines {
            g.a = tf(&g.a);
            g.b = tf(&g.b);
        }
        out
    }
}

/// Scenario config plus derived road geometry.
#[derive(Clone, Debug)]
pub struct Scene {
    pub config: ScenarioConfig,
    pub road: Road,
}

impl Scene {
    pub fn new(config: ScenarioConfig) -> Self {
        let road = Road::new(config.centerline.clone(), config.road_width);
        Scene { config, road }
    }

    /// Arc length of the goal line of `agent`.
    pub fn goal_s(&self, agent: usize) -> f64 {
        self.config.goal_lines[agent].s
    }

    /// +1 for agent 0 (increasing arc length), -1 for agent 1.
    pub fn direction(agent: usize) -> f64 {
        if agent == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

pub fn generate_scenario(level: u8, seed: u64) -> Result<ScenarioConfig> {
    generate_scenario_with(&ScenarioParams::default(), level, seed)
}

/// Deterministic in `(params, level, seed)`.
///
/// Obstacles hug alternating road edges between 20 % and 80 % of the road
/// length; placements are redrawn until every cross-section keeps a free
/// corridor of at least [`MIN_GAP`].
pub fn generate_scenario_with(params: &ScenarioParams, level: u8, seed: u64) -> Result<ScenarioConfig> {
    let count = obstacle_count(level)?;
    params.validate()?;
    let shape = road_shape(level);
    let length = params.road_length;
    let width = params.road_width;
    let centerline = shape.polyline(length, CENTERLINE_STEP);
    let road = Road::new(centerline.clone(), width);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(level) << 56));
    let (s_lo, s_hi) = (0.2 * length, 0.8 * length);
    let mut obstacles = None;
    for _ in 0..PLACEMENT_ATTEMPTS {
        // uniform over placements respecting the minimum spacing
        let slack = (s_hi - s_lo) - (count - 1) as f64 * MIN_OBSTACLE_SPACING;
        let mut positions: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..slack)).collect();
        positions.sort_by(f64::total_cmp);
        for (i, p) in positions.iter_mut().enumerate() {
            *p += s_lo + i as f64 * MIN_OBSTACLE_SPACING;
        }
        let mut side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut placed = Vec::with_capacity(count);
        for &s in &positions {
            let radius = rng.random_range(OBSTACLE_RADIUS_MIN..=OBSTACLE_RADIUS_MAX);
            let (c, _) = road.pose_at(s);
            let center = c + road.normal_at(s) * (side * (width / 2.0 - radius));
            placed.push(Obstacle { center, radius });
            side = -side;
        }
        let spaced = positions.windows(2).all(|w| w[1] - w[0] >= MIN_OBSTACLE_SPACING);
        if spaced && min_free_gap(&road, &placed, s_lo - 2.0, s_hi + 2.0, GAP_CHECK_STEP) >= MIN_GAP {
            obstacles = Some(placed);
            break;
        }
    }
    let obstacles = obstacles.ok_or(Error::ScenarioGeneration {
        level,
        seed,
        attempts: PLACEMENT_ATTEMPTS,
    })?;

    let spawn_s = [SPAWN_OFFSET, length - SPAWN_OFFSET];
    let goal_s = [length - GOAL_OFFSET, GOAL_OFFSET];
    let mut spawn_poses = [Pose {
        x: 0.0,
        y: 0.0,
        heading: 0.0,
    }; 2];
    let mut goal_lines = [GoalLine {
        s: 0.0,
        a: Vec2::zeros(),
        b: Vec2::zeros(),
    }; 2];
    for agent in 0..2 {
        let dir = Scene::direction(agent);
        // each vehicle starts in the right-hand half of the road for its direction
        let (c, h) = road.pose_at(spawn_s[agent]);
        let p = c - road.normal_at(spawn_s[agent]) * (dir * width / 4.0);
        let heading = if agent == 0 {
            h
        } else {
            super::geometry::normalize_angle(h + std::f64::consts::PI)
        };
        spawn_poses[agent] = Pose {
            x: p.x,
            y: p.y,
            heading,
        };
        let (g, _) = road.pose_at(goal_s[agent]);
        let n = road.normal_at(goal_s[agent]);
        goal_lines[agent] = GoalLine {
            s: goal_s[agent],
            a: g + n * (width / 2.0),
            b: g - n * (width / 2.0),
        };
    }

    Ok(ScenarioConfig {
        level,
        road_length: length,
        road_width: width,
        shape,
        centerline,
        obstacles,
        spawn_poses,
        goal_lines,
        v_max: params.v_max,
        dt: params.dt,
        max_steps: params.max_steps,
        rng_seed: seed,
    })
}

/// Narrowest "widest free interval" over cross-sections in `[s_lo, s_hi]`.
///
/// Each cross-section is the line through the centerline point along its
/// normal; circles block the chord they cut from it.
pub fn min_free_gap(road: &Road, obstacles: &[Obstacle], s_lo: f64, s_hi: f64, step: f64) -> f64 {
    let half = road.width() / 2.0;
    let n = ((s_hi - s_lo) / step).ceil() as usize;
    let mut worst = f64::INFINITY;
    let mut blocked: Vec<(f64, f64)> = Vec::new();
    for k in 0..=n {
        let s = (s_lo + k as f64 * step).clamp(0.0, road.length());
        let (c, _) = road.pose_at(s);
        let normal = road.normal_at(s);
        blocked.clear();
        for o in obstacles {
            let d = o.center - c;
            let along = d.dot(&normal);
            let perp2 = d.norm_squared() - along * along;
            let r2 = o.radius * o.radius;
            if perp2 < r2 {
                let h = (r2 - perp2).sqrt();
                blocked.push((along - h, along + h));
            }
        }
        blocked.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = 0.0f64;
        let mut cursor = -half;
        for &(lo, hi) in &blocked {
            if lo > cursor {
                best = best.max(lo.min(half) - cursor);
            }
            cursor = cursor.max(hi);
            if cursor >= half {
                break;
            }
        }
        if cursor < half {
            best = best.max(half - cursor);
        }
        worst = worst.min(best);
    }
    worst
}
