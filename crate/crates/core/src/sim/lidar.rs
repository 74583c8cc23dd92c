//! 16-beam range sensor.

use std::f64::consts::PI;

use super::geometry::{ray_circle, ray_segment, unit, Obb, Vec2};
use super::scenario::{Obstacle, Scene};
use super::vehicle::VehicleState;

pub const LIDAR_RAYS: usize = 16;
pub const LIDAR_RANGE: f64 = 30.0;

/// Geometry a beam can hit.
#[derive(Clone, Copy, Debug, Default)]
pub struct Occluders<'a> {
    pub circles: &'a [Obstacle],
    pub boxes: &'a [Obb],
    /// Open polylines; consecutive vertices form segments.
    pub polylines: &'a [&'a [Vec2]],
}

/// Casts evenly spaced beams, beam 0 along `heading`, counter-clockwise.
/// Each reading is capped at [`LIDAR_RANGE`].
pub fn cast_rays(origin: &Vec2, heading: f64, world: &Occluders<'_>) -> [f64; LIDAR_RAYS] {
    let reach = LIDAR_RANGE;
    let near_circles: Vec<&Obstacle> = world
        .circles
        .iter()
        .filter(|c| (c.center - origin).norm() <= reach + c.radius)
        .collect();
    let mut out = [reach; LIDAR_RAYS];
    for (k, reading) in out.iter_mut().enumerate() {
        let dir = unit(heading + 2.0 * PI * k as f64 / LIDAR_RAYS as f64);
        let mut best = reach;
        for c in &near_circles {
            if let Some(t) = ray_circle(origin, &dir, &c.center, c.radius) {
                best = best.min(t);
            }
        }
        for b in world.boxes {
            if let Some(t) = b.ray_hit(origin, &dir) {
                best = best.min(t);
            }
        }
        for line in world.polylines {
            for seg in line.windows(2) {
                if let Some(t) = ray_segment(origin, &dir, &seg[0], &seg[1]) {
                    best = best.min(t);
                }
            }
        }
        *reading = best.min(reach);
    }
    out
}

/// Sensor mounted at the body centre of `ego`. Sees obstacles, the other
/// vehicle's body, and both road edges.
pub fn cast_lidar(scene: &Scene, ego: &VehicleState, other: &VehicleState) -> [f64; LIDAR_RAYS] {
    let origin = ego.body_center();
    let s = scene.road.project(&origin).s;
    // boundary arc length can exceed centerline arc length on the outside of a bend
    let window = LIDAR_RANGE * 1.25 + scene.config.road_width;
    let (left, right) = scene.road.boundaries_within(s - window, s + window);
    let lines = [left, right];
    let boxes = [other.body()];
    let world = Occluders {
        circles: &scene.config.obstacles,
        boxes: &boxes,
        polylines: &lines,
    };
    cast_rays(&origin, ego.heading, &world)
}
