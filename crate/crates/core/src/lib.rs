//! Digital-twin runtime verification for a differential-drive robot.
//!
//! `stream` interprets the monitor language, `monitors` implements the
//! safety and performance properties, `sim` is the robot, `twin` the twin
//! service and `harness` ties them into experiments.

pub mod harness;
pub mod monitors;
pub mod msg;
pub mod sim;
pub mod stream;
pub mod twin;
