//! Sense, analyze, validate, act.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::geometry::World;
use super::mission::Mission;
use super::robot::{encoder_speed, pose_speed, simulate_lidar, step, Estimator, Pose, RobotParams};
use super::scenario::Scenario;
use super::terrain::{Cell, TerrainProfile};
use crate::monitors::{scalar_speed, SpeedCombiner};
use crate::msg::{ActuationCommand, RobotStateMsg, VerdictMsg};

pub const FIRMWARE_ID: &str = "rvtwin-sim/0.1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinkError {
    #[error("transport failure: {0}")]
    Transport(String),
}

/// The robot's view of its twin: hand over a state, get a verdict back or
/// `None` on timeout.
pub trait TwinLink {
    fn exchange(&mut self, state: &RobotStateMsg) -> Result<Option<VerdictMsg>, LinkError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Execute proposals directly.
    Default,
    /// Execute only what the twin sends back.
    Augmented,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Default => "default",
            Mode::Augmented => "augmented",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "default" => Ok(Mode::Default),
            "augmented" => Ok(Mode::Augmented),
            _ => Err(format!("unknown mode `{s}`, expected default or augmented")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub seq: u64,
    pub t: f64,
    pub expected_speed: f64,
    /// Speed reported by the configured estimator over the previous tick.
    pub actual_speed: f64,
    pub encoder_speed: f64,
    pub pose_speed: f64,
    pub proposed: ActuationCommand,
    pub applied: ActuationCommand,
    pub approved: bool,
    pub corrected: bool,
    pub p1_ok: bool,
    pub p2_ok: bool,
    pub faulty_beams: usize,
    /// No usable verdict arrived; the robot stopped.
    pub fail_safe: bool,
    pub collision: bool,
    /// Noise-free distance straight ahead before moving.
    pub clearance: f64,
    pub pose: Pose,
}

pub const TICK_CSV_HEADER: [&str; 8] =
    ["t", "expected_speed", "actual_speed", "applied_linear", "applied_angular", "approved", "corrected", "collision"];

impl TickRecord {
    pub fn csv_row(&self) -> [String; 8] {
        [
            self.t.to_string(),
            self.expected_speed.to_string(),
            self.actual_speed.to_string(),
            self.applied.linear.to_string(),
            self.applied.angular.to_string(),
            self.approved.to_string(),
            self.corrected.to_string(),
            self.collision.to_string(),
        ]
    }
}

/// Simulated physical twin. Owns all mutable state; time is virtual.
pub struct Simulator {
    world: World,
    terrain: TerrainProfile,
    params: RobotParams,
    mission: Mission,
    combiner: SpeedCombiner,
    pose: Pose,
    prev: Option<(f64, Pose)>,
    last_applied: Option<ActuationCommand>,
    progress: usize,
    seq: u64,
    lidar_rng: ChaCha8Rng,
    terrain_rng: ChaCha8Rng,
}

impl Simulator {
    pub fn new(scenario: &Scenario, seed: u64) -> Self {
        let rng = |stream| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(stream);
            r
        };
        Simulator {
            world: scenario.world.clone(),
            terrain: scenario.terrain.clone(),
            params: scenario.robot.clone(),
            mission: scenario.mission.clone(),
            combiner: scenario.monitor.speed_combiner,
            pose: scenario.start,
            prev: None,
            last_applied: None,
            progress: 0,
            seq: 0,
            lidar_rng: rng(1),
            terrain_rng: rng(2),
        }
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn time(&self) -> f64 {
        self.seq as f64 * self.params.control_period
    }

    fn speed(&self, linear: f64, angular: f64) -> f64 {
        scalar_speed(linear, angular, self.combiner, self.params.wheel_separation)
    }

    pub fn tick(&mut self, mode: Mode, link: Option<&mut dyn TwinLink>) -> TickRecord {
        let dt = self.params.control_period;
        let seq = self.seq;
        let t = self.time();

        // Sense.
        let scan = simulate_lidar(&self.world, self.pose, &self.params, &mut self.lidar_rng);
        let enc = encoder_speed(self.last_applied);
        let (pose_v, pose_w) = match self.prev {
            Some((t0, p0)) => (pose_speed((t0, p0), (t, self.pose)), (self.pose.theta - p0.theta) / (t - t0)),
            None => (0.0, 0.0),
        };
        let (actual_linear, actual_angular) = match self.params.estimator {
            Estimator::Pose => (pose_v, pose_w),
            Estimator::Encoder => (enc, self.last_applied.map_or(0.0, |c| c.angular)),
        };

        // Analyze.
        let mut proposed = self.mission.propose(t, self.pose, &mut self.progress);
        proposed.linear = proposed.linear.clamp(-self.params.v_max, self.params.v_max);
        let expected_speed = self.speed(proposed.linear, proposed.angular);
        let actual_speed = self.speed(actual_linear, actual_angular);

        // Validate.
        let mut rec = TickRecord {
            seq,
            t,
            expected_speed,
            actual_speed,
            encoder_speed: enc,
            pose_speed: pose_v,
            proposed,
            applied: proposed,
            approved: true,
            corrected: false,
            p1_ok: true,
            p2_ok: true,
            faulty_beams: 0,
            fail_safe: false,
            collision: false,
            clearance: self.world.ray(self.pose.x, self.pose.y, self.pose.theta),
            pose: self.pose,
        };
        if let (Mode::Augmented, Some(link)) = (mode, link) {
            let state = RobotStateMsg {
                seq,
                t,
                expected_linear: proposed.linear,
                expected_angular: proposed.angular,
                actual_linear,
                actual_angular,
                expected_speed,
                actual_speed,
                lidar: scan.into_ranges(),
                proposed,
                meta: vec![
                    FIRMWARE_ID.to_string(),
                    mode.name().to_string(),
                    self.params.estimator.name().to_string(),
                    self.mission.id().to_string(),
                    "100".to_string(),
                    self.terrain.tag_at(self.pose.x).to_string(),
                    String::new(),
                ],
            };
            match link.exchange(&state) {
                Ok(Some(v)) if v.seq == seq => {
                    rec.approved = v.approved;
                    rec.corrected = !v.approved && v.p1_ok;
                    rec.p1_ok = v.p1_ok;
                    rec.p2_ok = v.p2_ok;
                    rec.faulty_beams = v.faulty_beams.len();
                    rec.applied = if v.approved { proposed } else { v.action };
                }
                Ok(_) | Err(_) => {
                    log::warn!("seq {seq}: no verdict, stopping");
                    rec.approved = false;
                    rec.fail_safe = true;
                    rec.applied = ActuationCommand::STOP;
                }
            }
        } else if mode == Mode::Augmented {
            rec.approved = false;
            rec.fail_safe = true;
            rec.applied = ActuationCommand::STOP;
        }

        // Act.
        let mut cell = self.terrain.at(self.pose.x);
        let j = self.terrain.traction_jitter;
        let noise = if j > 0.0 { self.terrain_rng.gen_range(-j..=j) } else { 0.0 };
        cell = Cell { traction: (cell.traction + noise).clamp(0.01, 1.0), ..cell };
        let res = step(&self.world, cell, self.pose, rec.applied, dt);
        rec.collision = res.collision;
        self.prev = Some((t, self.pose));
        self.pose = res.pose;
        self.last_applied = Some(rec.applied);
        self.seq += 1;
        rec
    }

    /// Runs `ticks` control cycles.
    pub fn run(&mut self, mode: Mode, mut link: Option<&mut dyn TwinLink>, ticks: u64) -> Vec<TickRecord> {
        let mut out = Vec::with_capacity(ticks as usize);
        for _ in 0..ticks {
            let l = link.as_mut().map(|l| &mut **l as &mut dyn TwinLink);
            out.push(self.tick(mode, l));
        }
        out
    }
}
