//! Kinematic bicycle model referenced at the rear axle.

use serde::{Deserialize, Serialize};

use super::geometry::{normalize_angle, unit, Obb, Vec2};

pub const VEHICLE_LENGTH: f64 = 4.5;
pub const VEHICLE_WIDTH: f64 = 1.8;
pub const WHEELBASE: f64 = 2.8;
pub const MAX_WHEEL_ANGLE: f64 = 35.0 * std::f64::consts::PI / 180.0;
pub const MAX_ACCEL: f64 = 3.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Rear-axle position.
    pub x: f64,
    pub y: f64,
    /// Radians in `(-pi, pi]`.
    pub heading: f64,
    /// m/s in `[0, v_max]`.
    pub speed: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        VehicleState {
            x,
            y,
            heading: normalize_angle(heading),
            speed,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn front_axle(&self) -> Vec2 {
        self.position() + unit(self.heading) * WHEELBASE
    }

    /// Centre of the body rectangle, midway between the axles.
    pub fn body_center(&self) -> Vec2 {
        self.position() + unit(self.heading) * (WHEELBASE / 2.0)
    }

    pub fn body(&self) -> Obb {
        Obb {
            center: self.body_center(),
            heading: self.heading,
            half_length: VEHICLE_LENGTH / 2.0,
            half_width: VEHICLE_WIDTH / 2.0,
        }
    }
}

/// Normalized command: both fields in `[-1, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionCommand {
    pub steer: f64,
    pub accel: f64,
}

impl ActionCommand {
    /// Clamps a raw policy output `[steer, accel]`.
    pub fn from_raw(raw: [f64; 2]) -> Self {
        ActionCommand {
            steer: raw[0],
            accel: raw[1],
        }
        .clamped()
    }

    pub fn clamped(self) -> Self {
        ActionCommand {
            steer: self.steer.clamp(-1.0, 1.0),
            accel: self.accel.clamp(-1.0, 1.0),
        }
    }

    pub fn wheel_angle(&self) -> f64 {
        self.steer.clamp(-1.0, 1.0) * MAX_WHEEL_ANGLE
    }

    pub fn acceleration(&self) -> f64 {
        self.accel.clamp(-1.0, 1.0) * MAX_ACCEL
    }
}

/// One explicit Euler step; speed is clamped to `[0, v_max]`.
pub fn bicycle_step(state: &VehicleState, cmd: &ActionCommand, dt: f64, v_max: f64) -> VehicleState {
    debug_assert!(dt > 0.0);
    let v = state.speed;
    let (sin_h, cos_h) = state.heading.sin_cos();
    VehicleState {
        x: state.x + v * cos_h * dt,
        y: state.y + v * sin_h * dt,
        heading: normalize_angle(state.heading + v / WHEELBASE * cmd.wheel_angle().tan() * dt),
        speed: (v + cmd.acceleration() * dt).clamp(0.0, v_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resting_vehicle_with_zero_accel_stays_put() {
        let s = VehicleState::new(3.0, -1.0, 0.7, 0.0);
        for steer in [-1.0, 0.0, 0.4, 1.0] {
            let cmd = ActionCommand { steer, accel: 0.0 };
            assert_eq!(bicycle_step(&s, &cmd, 0.1, 8.0), s);
        }
    }

    #[test]
    fn straight_line_advance() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        let n = bicycle_step(&s, &ActionCommand::default(), 0.1, 8.0);
        assert_eq!(n.x, 0.1);
        assert_eq!(n.y, 0.0);
        assert_eq!(n.heading, 0.0);
        assert_eq!(n.speed, 1.0);
    }

    #[test]
    fn commands_are_clamped() {
        let c = ActionCommand::from_raw([3.0, -7.0]);
        assert_eq!((c.steer, c.accel), (1.0, -1.0));
        let s = VehicleState::new(0.0, 0.0, 0.0, 0.1);
        let n = bicycle_step(
            &s,
            &ActionCommand {
                steer: 0.0,
                accel: -5.0,
            },
            0.1,
            8.0,
        );
        assert_eq!(n.speed, 0.0);
        let n = bicycle_step(
            &VehicleState::new(0.0, 0.0, 0.0, 7.9),
            &ActionCommand { steer: 0.0, accel: 1.0 },
            0.1,
            8.0,
        );
        assert_eq!(n.speed, 8.0);
    }

    #[test]
    fn body_geometry() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 0.0);
        assert_eq!(s.front_axle(), Vec2::new(2.8, 0.0));
        let c = s.body().corners();
        let xs: Vec<f64> = c.iter().map(|p| p.x).collect();
        assert!((xs.iter().cloned().fold(f64::MIN, f64::max) - 3.65).abs() < 1e-12);
        assert!((xs.iter().cloned().fold(f64::MAX, f64::min) + 0.85).abs() < 1e-12);
    }
}
