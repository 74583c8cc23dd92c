//! Planar primitives: rays, circles, segments and oriented boxes.

use std::f64::consts::PI;

use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[inline]
pub fn unit(angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c, s)
}

#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

#[inline]
pub fn rotate(v: &Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Distance along a unit-direction ray to the first hit on a circle.
/// An origin inside the circle reports 0.
pub fn ray_circle(origin: &Vec2, dir: &Vec2, center: &Vec2, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let c = oc.norm_squared() - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let b = oc.dot(dir);
    if b > 0.0 {
        return None;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    Some(-b - disc.sqrt())
}

/// Distance along a unit-direction ray to segment `a-b`.
pub fn ray_segment(origin: &Vec2, dir: &Vec2, a: &Vec2, b: &Vec2) -> Option<f64> {
    let e = b - a;
    let denom = cross(dir, &e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = a - origin;
    let t = cross(&ao, &e) / denom;
    let u = cross(&ao, dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Oriented rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obb {
    pub center: Vec2,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl Obb {
    pub fn axes(&self) -> (Vec2, Vec2) {
        let u = unit(self.heading);
        (u, Vec2::new(-u.y, u.x))
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let (u, v) = self.axes();
        let (l, w) = (u * self.half_length, v * self.half_width);
        [
            self.center + l + w,
            self.center + l - w,
            self.center - l - w,
            self.center - l + w,
        ]
    }

    /// Point expressed in the box frame.
    fn local(&self, p: &Vec2) -> Vec2 {
        let (u, v) = self.axes();
        let d = p - self.center;
        Vec2::new(d.dot(&u), d.dot(&v))
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        let q = self.local(p);
        q.x.abs() <= self.half_length && q.y.abs() <= self.half_width
    }

    pub fn overlaps_circle(&self, center: &Vec2, radius: f64) -> bool {
        let q = self.local(center);
        let dx = (q.x.abs() - self.half_length).max(0.0);
        let dy = (q.y.abs() - self.half_width).max(0.0);
        dx * dx + dy * dy < radius * radius
    }

    /// Separating-axis test.
    pub fn overlaps(&self, other: &Obb) -> bool {
        let (a0, a1) = self.axes();
        let (b0, b1) = other.axes();
        let d = other.center - self.center;
        for axis in [a0, a1, b0, b1] {
            let ra = self.half_length * a0.dot(&axis).abs() + self.half_width * a1.dot(&axis).abs();
            let rb = other.half_length * b0.dot(&axis).abs() + other.half_width * b1.dot(&axis).abs();
            if d.dot(&axis).abs() > ra + rb {
                return false;
            }
        }
        true
    }

    /// Slab intersection in the box frame. An origin inside reports 0.
    pub fn ray_hit(&self, origin: &Vec2, dir: &Vec2) -> Option<f64> {
        let (u, v) = self.axes();
        let o = self.local(origin);
        let d = Vec2::new(dir.dot(&u), dir.dot(&v));
        let half = [self.half_length, self.half_width];
        let (mut t_min, mut t_max) = (0.0f64, f64::INFINITY);
        for k in 0..2 {
            if d[k].abs() < 1e-15 {
                if o[k].abs() > half[k] {
                    return None;
                }
            } else {
                let t1 = (-half[k] - o[k]) / d[k];
                let t2 = (half[k] - o[k]) / d[k];
                let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
                t_min = t_min.max(lo);
                t_max = t_max.min(hi);
                if t_min > t_max {
                    return None;
                }
            }
        }
        Some(t_min)
    }
}
