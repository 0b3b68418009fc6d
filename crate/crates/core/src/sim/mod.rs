//! Differential-drive robot in a 2-D world with slippery terrain and a
//! noisy lidar, plus the control loop that defers to the twin.

mod control;
mod geometry;
mod mission;
mod robot;
mod scenario;
mod terrain;

pub use control::{LinkError, Mode, Simulator, TickRecord, TwinLink, FIRMWARE_ID, TICK_CSV_HEADER};
pub use geometry::{Obstacle, Rect, World};
pub use mission::{Mission, DEFAULT_LEVELS};
pub use robot::{
    encoder_speed, normalize_angle, pose_speed, simulate_lidar, step, Estimator, Pose, RobotParams, StepResult,
};
pub use scenario::{Scenario, ScenarioError};
pub use terrain::{Cell, Segment, TerrainError, TerrainProfile};
