//! Wire types exchanged between robot and twin.

use serde::{Deserialize, Serialize};

pub const LIDAR_BEAMS: usize = 360;
pub const META_FIELDS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuationCommand {
    pub linear: f64,
    pub angular: f64,
}

impl ActuationCommand {
    pub const STOP: ActuationCommand = ActuationCommand { linear: 0.0, angular: 0.0 };

    pub fn new(linear: f64, angular: f64) -> Self {
        ActuationCommand { linear, angular }
    }
}

/// Per-cycle snapshot published by the robot.
///
/// `meta` holds firmware id, mode, estimator, mission id, battery, terrain
/// tag and a reserved slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RobotStateMsg {
    pub seq: u64,
    pub t: f64,
    pub expected_linear: f64,
    pub expected_angular: f64,
    pub actual_linear: f64,
    pub actual_angular: f64,
    pub expected_speed: f64,
    pub actual_speed: f64,
    pub lidar: Vec<f64>,
    pub proposed: ActuationCommand,
    pub meta: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MsgError {
    #[error("lidar has {0} values, expected 360")]
    LidarLength(usize),
    #[error("meta has {0} fields, expected 7")]
    MetaLength(usize),
    #[error("field `{0}` is not finite")]
    NotFinite(&'static str),
    #[error("negative speed in `{0}`")]
    NegativeSpeed(&'static str),
}

impl RobotStateMsg {
    pub fn validate(&self) -> Result<(), MsgError> {
        if self.lidar.len() != LIDAR_BEAMS {
            return Err(MsgError::LidarLength(self.lidar.len()));
        }
        if self.meta.len() != META_FIELDS {
            return Err(MsgError::MetaLength(self.meta.len()));
        }
        let scalars = [
            ("t", self.t),
            ("expectedLinear", self.expected_linear),
            ("expectedAngular", self.expected_angular),
            ("actualLinear", self.actual_linear),
            ("actualAngular", self.actual_angular),
            ("expectedSpeed", self.expected_speed),
            ("actualSpeed", self.actual_speed),
            ("proposed.linear", self.proposed.linear),
            ("proposed.angular", self.proposed.angular),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return Err(MsgError::NotFinite(name));
            }
        }
        if self.lidar.iter().any(|r| !r.is_finite()) {
            return Err(MsgError::NotFinite("lidar"));
        }
        if self.expected_speed < 0.0 {
            return Err(MsgError::NegativeSpeed("expectedSpeed"));
        }
        if self.actual_speed < 0.0 {
            return Err(MsgError::NegativeSpeed("actualSpeed"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerdictMsg {
    pub seq: u64,
    pub t: f64,
    pub p1_ok: bool,
    pub p2_ok: bool,
    pub faulty_beams: Vec<u16>,
    pub approved: bool,
    pub action: ActuationCommand,
}

#[cfg(test)]
pub(crate) fn sample_state(seq: u64) -> RobotStateMsg {
    RobotStateMsg {
        seq,
        t: seq as f64 * 0.1,
        expected_linear: 0.1,
        expected_angular: 0.0,
        actual_linear: 0.1,
        actual_angular: 0.0,
        expected_speed: 0.1,
        actual_speed: 0.1,
        lidar: vec![3.5; LIDAR_BEAMS],
        proposed: ActuationCommand::new(0.1, 0.0),
        meta: vec![String::new(); META_FIELDS],
    }
}
