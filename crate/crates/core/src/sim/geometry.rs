use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Rect { min_x, min_y, max_x, max_y }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x > self.min_x && x < self.max_x && y > self.min_y && y < self.max_y
    }

    /// Entry and exit parameters of the ray against the slab box.
    fn slab(&self, x: f64, y: f64, dx: f64, dy: f64) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (o, d, a, b) in [(x, dx, self.min_x, self.max_x), (y, dy, self.min_y, self.max_y)] {
            if d.abs() < 1e-15 {
                if o < a || o > b {
                    return None;
                }
            } else {
                let (t1, t2) = ((a - o) / d, (b - o) / d);
                lo = lo.max(t1.min(t2));
                hi = hi.min(t1.max(t2));
            }
        }
        (lo <= hi).then_some((lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstacle {
    Rect(Rect),
    Circle { x: f64, y: f64, r: f64 },
}

impl Obstacle {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Obstacle::Rect(r) => r.contains(x, y),
            Obstacle::Circle { x: cx, y: cy, r } => (x - cx).powi(2) + (y - cy).powi(2) < r * r,
        }
    }

    /// Distance along the unit ray to the first boundary crossing, if ahead.
    pub fn ray(&self, x: f64, y: f64, dx: f64, dy: f64) -> Option<f64> {
        match *self {
            Obstacle::Rect(r) => {
                let (lo, hi) = r.slab(x, y, dx, dy)?;
                if hi < 0.0 {
                    None
                } else {
                    Some(lo.max(0.0))
                }
            }
            Obstacle::Circle { x: cx, y: cy, r } => {
                let (ox, oy) = (x - cx, y - cy);
                let b = ox * dx + oy * dy;
                let c = ox * ox + oy * oy - r * r;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                let (t1, t2) = (-b - s, -b + s);
                if t2 < 0.0 {
                    None
                } else {
                    Some(t1.max(0.0))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct World {
    pub bounds: Rect,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

impl World {
    pub fn open(bounds: Rect) -> Self {
        World { bounds, obstacles: Vec::new() }
    }

    pub fn is_free(&self, x: f64, y: f64) -> bool {
        self.bounds.contains(x, y) && !self.obstacles.iter().any(|o| o.contains(x, y))
    }

    /// Exact distance from `(x, y)` along `angle` to the nearest obstacle or
    /// the bounding wall.
    pub fn ray(&self, x: f64, y: f64, angle: f64) -> f64 {
        let (dy, dx) = angle.sin_cos();
        let wall = self.bounds.slab(x, y, dx, dy).map_or(0.0, |(_, hi)| hi.max(0.0));
        self.obstacles.iter().filter_map(|o| o.ray(x, y, dx, dy)).fold(wall, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn room() -> World {
        World::open(Rect::new(-5.0, -2.0, 5.0, 2.0))
    }

    #[test]
    fn bounds_distances() {
        let w = room();
        assert!((w.ray(0.0, 0.0, 0.0) - 5.0).abs() < 1e-12);
        assert!((w.ray(0.0, 0.0, FRAC_PI_2) - 2.0).abs() < 1e-12);
        assert!((w.ray(1.0, 0.0, PI) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rect_and_circle_hits() {
        let mut w = room();
        w.obstacles.push(Obstacle::Rect(Rect::new(1.0, -0.5, 1.5, 0.5)));
        w.obstacles.push(Obstacle::Circle { x: -2.0, y: 0.0, r: 0.5 });
        assert!((w.ray(0.0, 0.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((w.ray(0.0, 0.0, PI) - 1.5).abs() < 1e-12);
        let diag = w.ray(0.0, 0.0, 0.4f64.atan2(1.0));
        assert!((diag - (1.0f64 + 0.16).sqrt()).abs() < 1e-12);
        assert!(!w.is_free(1.2, 0.0));
        assert!(!w.is_free(-2.2, 0.1));
        assert!(w.is_free(0.0, 0.0));
        assert!(!w.is_free(6.0, 0.0));
    }

    #[test]
    fn obstacle_behind_is_ignored() {
        let o = Obstacle::Rect(Rect::new(-2.0, -1.0, -1.0, 1.0));
        assert_eq!(o.ray(0.0, 0.0, 1.0, 0.0), None);
        assert_eq!(o.ray(0.0, 0.0, -1.0, 0.0), Some(1.0));
    }
}
