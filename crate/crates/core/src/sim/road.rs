//! Centerline polylines and projection onto them.

use serde::{Deserialize, Serialize};

use super::geometry::{cross, unit, Vec2};

/// Polyline spacing of generated centerlines.
pub const CENTERLINE_STEP: f64 = 0.1;
/// Radius of each arc of the S-curve.
pub const S_CURVE_RADIUS: f64 = 40.0;
/// Every `BOUNDARY_STRIDE`-th centerline vertex is used for boundary polylines.
const BOUNDARY_STRIDE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadShape {
    Straight,
    /// Straight lead-in, left arc, right arc, straight run-out (10/40/40/10 % of the length).
    SCurve,
}

impl RoadShape {
    /// Analytic centerline pose at arc length `s` (clamped to the road).
    pub fn pose_at(self, length: f64, s: f64) -> (Vec2, f64) {
        let s = s.clamp(0.0, length);
        match self {
            RoadShape::Straight => (Vec2::new(s, 0.0), 0.0),
            RoadShape::SCurve => {
                let lead = 0.1 * length;
                let arc = 0.4 * length;
                let r = S_CURVE_RADIUS;
                if s <= lead {
                    return (Vec2::new(s, 0.0), 0.0);
                }
                // first arc turns left around (lead, r)
                let a1 = (s.min(lead + arc) - lead) / r;
                let p1 = Vec2::new(lead + r * a1.sin(), r * (1.0 - a1.cos()));
                if s <= lead + arc {
                    return (p1, a1);
                }
                // second arc turns right back to heading 0
                let h1 = arc / r;
                let end1 = Vec2::new(lead + r * h1.sin(), r * (1.0 - h1.cos()));
                let center2 = end1 + unit(h1 - std::f64::consts::FRAC_PI_2) * r;
                let a2 = (s.min(lead + 2.0 * arc) - lead - arc) / r;
                let h2 = h1 - a2;
                let p2 = center2 + unit(h2 + std::f64::consts::FRAC_PI_2) * r;
                if s <= lead + 2.0 * arc {
                    return (p2, h2);
                }
                let rest = s - lead - 2.0 * arc;
                (p2 + unit(h2) * rest, h2)
            }
        }
    }

    /// Polyline sampled every `step` meters of arc length, endpoints included.
    pub fn polyline(self, length: f64, step: f64) -> Vec<Vec2> {
        let n = (length / step).round() as usize;
        (0..=n)
            .map(|i| self.pose_at(length, (i as f64 * step).min(length)).0)
            .collect()
    }
}

/// Result of projecting a point onto the centerline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point. Extrapolated (outside `[0, length]`) past either end.
    pub s: f64,
    /// Signed offset, positive to the left of increasing `s`.
    pub lateral: f64,
    /// Tangent heading of the segment hit.
    pub heading: f64,
    pub segment: usize,
}

/// Derived geometry for a centerline polyline.
#[derive(Clone, Debug)]
pub struct Road {
    points: Vec<Vec2>,
    cum: Vec<f64>,
    width: f64,
    left: Vec<Vec2>,
    right: Vec<Vec2>,
    /// `cum` value of every boundary vertex.
    boundary_s: Vec<f64>,
}

impl Road {
    pub fn new(points: Vec<Vec2>, width: f64) -> Self {
        assert!(points.len() >= 2, "centerline needs two points");
        let mut cum = Vec::with_capacity(points.len());
        cum.push(0.0);
        for w in points.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + (w[1] - w[0]).norm());
        }

        let n = points.len();
        let mut idx: Vec<usize> = (0..n).step_by(BOUNDARY_STRIDE).collect();
        if *idx.last().unwrap() != n - 1 {
            idx.push(n - 1);
        }
        let half = width / 2.0;
        let mut left = Vec::with_capacity(idx.len());
        let mut right = Vec::with_capacity(idx.len());
        for &i in &idx {
            let t = vertex_tangent(&points, i);
            let normal = Vec2::new(-t.y, t.x);
            left.push(points[i] + normal * half);
            right.push(points[i] - normal * half);
        }
        let boundary_s = idx.iter().map(|&i| cum[i]).collect();
        Road {
            points,
            cum,
            width,
            left,
            right,
            boundary_s,
        }
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Centerline position and tangent heading at arc length `s` (clamped).
    pub fn pose_at(&self, s: f64) -> (Vec2, f64) {
        let s = s.clamp(0.0, self.length());
        let i = match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.points.len() - 2),
        };
        let (a, b) = (self.points[i], self.points[i + 1]);
        let seg = b - a;
        let len = seg.norm();
        let t = if len > 0.0 { (s - self.cum[i]) / len } else { 0.0 };
        (a + seg * t, seg.y.atan2(seg.x))
    }

    /// Unit left normal at arc length `s`.
    pub fn normal_at(&self, s: f64) -> Vec2 {
        let h = self.pose_at(s).1;
        let t = unit(h);
        Vec2::new(-t.y, t.x)
    }

    /// Projection onto the nearest centerline segment.
    ///
    /// A coarse pass over every 10th vertex picks a neighbourhood that is then
    /// searched exhaustively; the road never folds back on itself closer than
    /// that window.
    pub fn project(&self, p: &Vec2) -> Projection {
        let n = self.points.len();
        let coarse = (0..n)
            .step_by(BOUNDARY_STRIDE)
            .chain(std::iter::once(n - 1))
            .min_by(|&a, &b| {
                (self.points[a] - p)
                    .norm_squared()
                    .total_cmp(&(self.points[b] - p).norm_squared())
            })
            .unwrap();
        let lo = coarse.saturating_sub(2 * BOUNDARY_STRIDE);
        let hi = (coarse + 2 * BOUNDARY_STRIDE).min(n - 2);
        self.project_range(p, lo, hi)
    }

    /// Exhaustive projection over segments `lo..=hi`.
    pub fn project_range(&self, p: &Vec2, lo: usize, hi: usize) -> Projection {
        let last = self.points.len() - 2;
        let mut best: Option<(f64, Projection)> = None;
        for i in lo..=hi.min(last) {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let seg = b - a;
            let len2 = seg.norm_squared();
            let raw_t = if len2 > 0.0 { (p - a).dot(&seg) / len2 } else { 0.0 };
            // extrapolate only beyond the two ends of the road
            let t = match i {
                _ if i == 0 && raw_t < 0.0 => raw_t,
                _ if i == last && raw_t > 1.0 => raw_t,
                _ => raw_t.clamp(0.0, 1.0),
            };
            let foot = a + seg * t;
            let d2 = (p - foot).norm_squared();
            if best.as_ref().is_none_or(|(bd, _)| d2 < *bd) {
                let len = len2.sqrt();
                let lateral = if len > 0.0 { cross(&seg, &(p - a)) / len } else { 0.0 };
                best = Some((
                    d2,
                    Projection {
                        s: self.cum[i] + t * len,
                        lateral,
                        heading: seg.y.atan2(seg.x),
                        segment: i,
                    },
                ));
            }
        }
        best.expect("non-empty segment range").1
    }

    /// Left and right boundary vertices whose arc length lies within `[s_lo, s_hi]`,
    /// widened by one vertex on each side so clipped segments stay whole.
    pub fn boundaries_within(&self, s_lo: f64, s_hi: f64) -> (&[Vec2], &[Vec2]) {
        let lo = self.boundary_s.partition_point(|&s| s < s_lo).saturating_sub(1);
        let hi = (self.boundary_s.partition_point(|&s| s <= s_hi) + 1).min(self.left.len());
        (&self.left[lo..hi], &self.right[lo..hi])
    }

    pub fn left_boundary(&self) -> &[Vec2] {
        &self.left
    }

    pub fn right_boundary(&self) -> &[Vec2] {
        &self.right
    }
}

fn vertex_tangent(points: &[Vec2], i: usize) -> Vec2 {
    let n = points.len();
    let (a, b) = match i {
        0 => (points[0], points[1]),
        _ if i == n - 1 => (points[n - 2], points[n - 1]),
        _ => (points[i - 1], points[i + 1]),
    };
    (b - a).normalize()
}
