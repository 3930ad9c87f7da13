//! Obstacle geometry: source rectangles, their circle covers, and
//! line-of-sight tests against the covers.

use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, Vec2};
use serde::{Deserialize, Serialize};

/// Axis-aligned obstacle rectangle (the authored form).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectObstacle {
    pub center: Vec2,
    pub width: f64,
    pub height: f64,
}

impl RectObstacle {
    pub fn min(&self) -> Vec2 {
        Vec2::new(self.center.x - 0.5 * self.width, self.center.y - 0.5 * self.height)
    }

    pub fn max(&self) -> Vec2 {
        Vec2::new(self.center.x + 0.5 * self.width, self.center.y + 0.5 * self.height)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let lo = self.min();
        let hi = self.max();
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }
}

/// One circle of an obstacle cover. All collision, avoidance and visibility
/// math runs against these, never against the rectangles directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleObstacle {
    pub center: Vec2,
    pub radius: f64,
}

/// Covers a rectangle with equal-radius circles on a regular grid.
///
/// Grid spacing is at most `radius * sqrt(2)` on each axis, which puts every
/// rectangle point within `radius` of some center. Degenerate rectangles are
/// rejected.
pub fn cover_rectangle(rect: &RectObstacle, radius: f64) -> Result<Vec<CircleObstacle>> {
    if !(rect.width > 0.0 && rect.height > 0.0) {
        return Err(Error::DegenerateRectangle);
    }
    if !(radius > 0.0) {
        return Err(Error::Config(format!(
            "cover radius must be positive, got {radius}"
        )));
    }
    let max_spacing = radius * std::f64::consts::SQRT_2;
    let nx = (rect.width / max_spacing).ceil().max(1.0) as usize;
    let ny = (rect.height / max_spacing).ceil().max(1.0) as usize;
    let sx = rect.width / nx as f64;
    let sy = rect.height / ny as f64;
    let lo = rect.min();
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            out.push(CircleObstacle {
                center: Vec2::new(
                    lo.x + sx * (ix as f64 + 0.5),
                    lo.y + sy * (iy as f64 + 0.5),
                ),
                radius,
            });
        }
    }
    Ok(out)
}

/// The world's obstacle layout: authored rectangles plus their derived
/// circle cover.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObstacleSet {
    pub rects: Vec<RectObstacle>,
    pub circles: Vec<CircleObstacle>,
}

impl ObstacleSet {
    pub fn from_rects(rects: Vec<RectObstacle>, cover_radius: f64) -> Result<Self> {
        let mut circles = Vec::new();
        for r in &rects {
            circles.extend(cover_rectangle(r, cover_radius)?);
        }
        Ok(ObstacleSet { rects, circles })
    }

    pub fn empty() -> Self {
        ObstacleSet::default()
    }
}

/// True when the open segment between `a` and `b` misses every cover circle.
///
/// A circle blocks only when the segment passes strictly inside it; a
/// tangent segment still sees through.
pub fn line_of_sight(a: Vec2, b: Vec2, obstacles: &ObstacleSet) -> bool {
    for c in &obstacles.circles {
        if point_segment_distance(c.center, a, b) < c.radius {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_small_square_gets_one_centered_circle() {
        let rect = RectObstacle {
            center: Vec2::new(3.0, 4.0),
            width: 0.3,
            height: 0.3,
        };
        let cover = cover_rectangle(&rect, 0.3).unwrap();
        assert_eq!(cover.len(), 1);
        assert_eq!(cover[0].center, Vec2::new(3.0, 4.0));
    }

    #[test]
    fn long_bar_is_covered_along_its_axis() {
        let rect = RectObstacle {
            center: Vec2::new(0.0, 0.0),
            width: 1.2,
            height: 0.3,
        };
        let cover = cover_rectangle(&rect, 0.3).unwrap();
        assert_eq!(cover.len(), 3);
        let spacing = cover[1].center.x - cover[0].center.x;
        assert!(spacing <= 0.3 * std::f64::consts::SQRT_2 + 1e-12);
        assert!((cover.iter().map(|c| c.center.y).sum::<f64>()).abs() < 1e-12);
    }

    /// Coverage oracle: every sampled rectangle point must fall inside some
    /// circle, for a batch of random rectangles.
    #[test]
    fn sampled_points_always_lie_in_some_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let rect = RectObstacle {
                center: Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)),
                width: rng.gen_range(0.05..6.0),
                height: rng.gen_range(0.05..6.0),
            };
            let cover = cover_rectangle(&rect, 0.3).unwrap();
            assert!(!cover.is_empty());
            for _ in 0..400 {
                let p = Vec2::new(
                    rng.gen_range(rect.min().x..=rect.max().x),
                    rng.gen_range(rect.min().y..=rect.max().y),
                );
                let covered = cover
                    .iter()
                    .any(|c| c.center.distance(p) <= c.radius + 1e-9);
                assert!(covered, "uncovered point {p:?} in {rect:?}");
            }
        }
    }

    #[test]
    fn degenerate_rectangle_is_rejected() {
        let rect = RectObstacle {
            center: Vec2::ZERO,
            width: 0.0,
            height: 1.0,
        };
        assert!(matches!(
            cover_rectangle(&rect, 0.3),
            Err(Error::DegenerateRectangle)
        ));
    }

    fn one_circle_world(center: Vec2, radius: f64) -> ObstacleSet {
        ObstacleSet {
            rects: vec![],
            circles: vec![CircleObstacle { center, radius }],
        }
    }

    #[test]
    fn circle_on_segment_blocks() {
        let obs = one_circle_world(Vec2::new(2.0, 0.0), 0.3);
        assert!(!line_of_sight(Vec2::ZERO, Vec2::new(4.0, 0.0), &obs));
    }

    #[test]
    fn empty_world_always_sees() {
        assert!(line_of_sight(
            Vec2::ZERO,
            Vec2::new(10.0, 3.0),
            &ObstacleSet::empty()
        ));
    }

    #[test]
    fn tangent_segment_is_visible() {
        // Segment along y = 0.3 exactly grazes a radius-0.3 circle at origin:
        // distance equals the radius, and the test is strict.
        let obs = one_circle_world(Vec2::ZERO, 0.3);
        assert!(line_of_sight(
            Vec2::new(-2.0, 0.3),
            Vec2::new(2.0, 0.3),
            &obs
        ));
        // Nudge inside and it blocks.
        let eps = 1e-9;
        assert!(!line_of_sight(
            Vec2::new(-2.0, 0.3 - eps),
            Vec2::new(2.0, 0.3 - eps),
            &obs
        ));
    }
}
