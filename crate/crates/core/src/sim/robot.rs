use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::geometry::World;
use super::terrain::Cell;
use crate::monitors::LidarScan;
use crate::msg::{ActuationCommand, LIDAR_BEAMS};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta: normalize_angle(theta) }
    }
}

/// Maps any angle onto (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Displacement over time, insensitive to wheel slip.
    #[default]
    Pose,
    /// Commanded wheel speed, blind to slip.
    Encoder,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Pose => "pose",
            Estimator::Encoder => "encoder",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    pub wheel_separation: f64,
    pub v_max: f64,
    pub lidar_min: f64,
    pub lidar_max: f64,
    pub lidar_sigma: f64,
    pub spike_prob: f64,
    pub control_period: f64,
    pub estimator: Estimator,
}

impl Default for RobotParams {
    fn default() -> Self {
        RobotParams {
            wheel_separation: 0.16,
            v_max: 0.22,
            lidar_min: 0.12,
            lidar_max: 3.5,
            lidar_sigma: 0.01,
            spike_prob: 0.0,
            control_period: 0.1,
            estimator: Estimator::Pose,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.v_max > 0.0 && self.wheel_separation > 0.0) {
            return Err("v_max and wheel_separation must be > 0".into());
        }
        if !(self.lidar_min >= 0.0 && self.lidar_max > self.lidar_min) {
            return Err("lidar range must satisfy 0 <= lidar_min < lidar_max".into());
        }
        if !(self.lidar_sigma >= 0.0) {
            return Err("lidar_sigma must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.spike_prob) && self.spike_prob != 1.0 {
            return Err("spike_prob must be in [0, 1]".into());
        }
        if !(self.control_period > 0.0) {
            return Err("control_period must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub pose: Pose,
    pub actual_linear: f64,
    pub collision: bool,
}

/// Margin kept between the robot centre and a contact surface.
const CONTACT_GAP: f64 = 1e-6;

/// Unicycle update on one terrain cell. Below the breakaway threshold the
/// wheels spin in place; above it the commanded speed is scaled by traction.
/// Motion into an obstacle or wall stops at contact.
pub fn step(world: &World, cell: Cell, pose: Pose, cmd: ActuationCommand, dt: f64) -> StepResult {
    let v_eff = if cmd.linear.abs() < cell.breakaway { 0.0 } else { cmd.linear * cell.traction };
    let mut dist = v_eff.abs() * dt;
    let mut collision = false;
    if dist > 0.0 {
        let heading = if v_eff >= 0.0 { pose.theta } else { pose.theta + PI };
        let room = (world.ray(pose.x, pose.y, heading) - CONTACT_GAP).max(0.0);
        if dist > room {
            dist = room;
            collision = true;
        }
    }
    let signed = dist.copysign(v_eff);
    let (s, c) = pose.theta.sin_cos();
    let next = Pose::new(pose.x + signed * c, pose.y + signed * s, pose.theta + cmd.angular * dt);
    StepResult { pose: next, actual_linear: signed / dt, collision }
}

/// One 360-beam sweep: exact range, clamped, Gaussian noise, clamped again;
/// each beam independently replaced by a uniform spike with `spike_prob`.
pub fn simulate_lidar<R: Rng>(world: &World, pose: Pose, params: &RobotParams, rng: &mut R) -> LidarScan {
    let noise = Normal::new(0.0, params.lidar_sigma).expect("sigma >= 0");
    let clamp = |r: f64| r.clamp(params.lidar_min, params.lidar_max);
    let ranges = (1..=LIDAR_BEAMS)
        .map(|j| {
            let exact = world.ray(pose.x, pose.y, pose.theta + (j as f64).to_radians());
            let r = clamp(clamp(exact) + noise.sample(rng));
            if rng.gen::<f64>() < params.spike_prob {
                rng.gen_range(params.lidar_min..=params.lidar_max)
            } else {
                r
            }
        })
        .collect();
    LidarScan::new(ranges).expect("360 beams")
}

/// Wheel-encoder speed: whatever the wheels were told to do.
pub fn encoder_speed(last_command: Option<ActuationCommand>) -> f64 {
    last_command.map_or(0.0, |c| c.linear.abs())
}

/// Displacement speed between two timed poses.
pub fn pose_speed(a: (f64, Pose), b: (f64, Pose)) -> f64 {
    let dt = b.0 - a.0;
    assert!(dt > 0.0, "pose samples must be time-ordered");
    (b.1.x - a.1.x).hypot(b.1.y - a.1.y) / dt
}
