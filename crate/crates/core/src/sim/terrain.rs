use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub x_start: f64,
    pub x_end: f64,
    pub traction: f64,
    #[serde(default)]
    pub breakaway: f64,
    #[serde(default)]
    pub tag: String,
}

/// Terrain under one point of the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub traction: f64,
    pub breakaway: f64,
}

impl Cell {
    pub const FLOOR: Cell = Cell { traction: 1.0, breakaway: 0.0 };
}

/// Traction bands along the x axis. Uncovered floor has traction 1 and no
/// breakaway threshold.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainProfile {
    pub segments: Vec<Segment>,
    /// Half-width of the uniform per-tick traction perturbation.
    pub traction_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TerrainError {
    #[error("segment {0} has x_end <= x_start")]
    Empty(usize),
    #[error("segment {0} overlaps its predecessor")]
    Overlap(usize),
    #[error("segment {0} traction must be in (0, 1]")]
    Traction(usize),
    #[error("segment {0} breakaway must be >= 0")]
    Breakaway(usize),
    #[error("traction_jitter must be in [0, 1)")]
    Jitter,
}

impl TerrainProfile {
    pub fn flat() -> Self {
        TerrainProfile::default()
    }

    pub fn validate(&self) -> Result<(), TerrainError> {
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.x_end > s.x_start) {
                return Err(TerrainError::Empty(i));
            }
            if !(s.traction > 0.0 && s.traction <= 1.0) {
                return Err(TerrainError::Traction(i));
            }
            if !(s.breakaway >= 0.0) {
                return Err(TerrainError::Breakaway(i));
            }
            if i > 0 && s.x_start < self.segments[i - 1].x_end {
                return Err(TerrainError::Overlap(i));
            }
        }
        if !(0.0..1.0).contains(&self.traction_jitter) {
            return Err(TerrainError::Jitter);
        }
        Ok(())
    }

    pub fn segment_at(&self, x: f64) -> Option<&Segment> {
        self.segments.iter().find(|s| x >= s.x_start && x < s.x_end)
    }

    pub fn at(&self, x: f64) -> Cell {
        self.segment_at(x).map_or(Cell::FLOOR, |s| Cell { traction: s.traction, breakaway: s.breakaway })
    }

    pub fn tag_at(&self, x: f64) -> &str {
        self.segment_at(x).map_or("floor", |s| if s.tag.is_empty() { "segment" } else { &s.tag })
    }
}
