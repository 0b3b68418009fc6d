use serde::{Deserialize, Serialize};

use super::robot::{normalize_angle, Pose};
use crate::msg::ActuationCommand;

pub const DEFAULT_LEVELS: [f64; 5] = [0.015, 0.03, 0.05, 0.075, 0.1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mission {
    /// Steps through `levels`, holding each for `dwell` seconds, then stops.
    Schedule {
        #[serde(default = "default_levels")]
        levels: Vec<f64>,
        dwell: f64,
    },
    Constant {
        linear: f64,
        #[serde(default)]
        angular: f64,
    },
    /// Visits points in order with a proportional heading controller.
    Waypoints {
        points: Vec<[f64; 2]>,
        speed: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        #[serde(default = "default_heading_gain")]
        heading_gain: f64,
    },
}

fn default_levels() -> Vec<f64> {
    DEFAULT_LEVELS.to_vec()
}

fn default_tolerance() -> f64 {
    0.05
}

fn default_heading_gain() -> f64 {
    1.5
}

impl Mission {
    pub fn schedule(dwell: f64) -> Self {
        Mission::Schedule { levels: default_levels(), dwell }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Mission::Schedule { .. } => "schedule",
            Mission::Constant { .. } => "constant",
            Mission::Waypoints { .. } => "waypoints",
        }
    }

    /// Natural end of the mission, if it has one.
    pub fn duration(&self) -> Option<f64> {
        match self {
            Mission::Schedule { levels, dwell } => Some(levels.len() as f64 * dwell),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Mission::Schedule { levels, dwell } => {
                if !(*dwell > 0.0) {
                    return Err("schedule dwell must be > 0".into());
                }
                if levels.iter().any(|l| !l.is_finite()) {
                    return Err("schedule levels must be finite".into());
                }
            }
            Mission::Constant { linear, angular } => {
                if !(linear.is_finite() && angular.is_finite()) {
                    return Err("constant command must be finite".into());
                }
            }
            Mission::Waypoints { points, speed, tolerance, .. } => {
                if points.is_empty() || !(*speed > 0.0) || !(*tolerance > 0.0) {
                    return Err("waypoints need points, speed > 0 and tolerance > 0".into());
                }
            }
        }
        Ok(())
    }

    /// Controller proposal at time `t` from `pose`; `progress` tracks the
    /// current waypoint.
    pub fn propose(&self, t: f64, pose: Pose, progress: &mut usize) -> ActuationCommand {
        match self {
            Mission::Schedule { levels, dwell } => {
                let idx = (t / dwell).floor();
                if t < 0.0 || idx >= levels.len() as f64 {
                    ActuationCommand::STOP
                } else {
                    ActuationCommand::new(levels[idx as usize], 0.0)
                }
            }
            Mission::Constant { linear, angular } => ActuationCommand::new(*linear, *angular),
            Mission::Waypoints { points, speed, tolerance, heading_gain } => {
                while let Some(p) = points.get(*progress) {
                    if (p[0] - pose.x).hypot(p[1] - pose.y) > *tolerance {
                        break;
                    }
                    *progress += 1;
                }
                match points.get(*progress) {
                    None => ActuationCommand::STOP,
                    Some(p) => {
                        let err = normalize_angle((p[1] - pose.y).atan2(p[0] - pose.x) - pose.theta);
                        let linear = if err.abs() > std::f64::consts::FRAC_PI_2 { 0.0 } else { speed * err.cos() };
                        ActuationCommand::new(linear, heading_gain * err)
                    }
                }
            }
        }
    }
}
