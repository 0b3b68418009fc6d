use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::World;
use super::mission::Mission;
use super::robot::{Pose, RobotParams};
use super::terrain::TerrainProfile;
use crate::monitors::MonitorConfig;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Simulated seconds; defaults to the mission's own length.
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default)]
    pub robot: RobotParams,
    pub world: World,
    #[serde(default)]
    pub start: Pose,
    #[serde(default)]
    pub terrain: TerrainProfile,
    pub mission: Mission,
    #[serde(default)]
    pub monitor: MonitorConfig,
}

fn default_seed() -> u64 {
    1
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if let Err(e) = self.robot.validate() {
            return bad(e);
        }
        if let Err(e) = self.terrain.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.mission.validate() {
            return bad(e);
        }
        if let Err(e) = self.monitor.validate() {
            return bad(e.to_string());
        }
        if !self.world.is_free(self.start.x, self.start.y) {
            return bad("start pose must be inside bounds and outside obstacles".into());
        }
        match self.duration() {
            Some(d) if d > 0.0 => Ok(()),
            _ => bad("duration must be > 0 (set it explicitly for open-ended missions)".into()),
        }
    }

    pub fn duration(&self) -> Option<f64> {
        self.duration.or_else(|| self.mission.duration())
    }

    pub fn ticks(&self) -> u64 {
        (self.duration().unwrap_or(0.0) / self.robot.control_period).round() as u64
    }
}
