//! Safety and performance properties over robot state.
//!
//! P1 keeps the braking distance below the free distance in the heading
//! cone, P2 bounds the gap between expected and actual speed, P3 flags
//! single-beam lidar outliers. All functions here are pure.

mod dsl;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::msg::{ActuationCommand, RobotStateMsg, LIDAR_BEAMS};

pub use dsl::{DslError, P2DslMonitor, P2Outputs, P2_SPEC};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonitorError {
    #[error("scan has {0} beams, expected 360")]
    ScanLength(usize),
    #[error("every beam is faulty, scan unusable")]
    AllBeamsFaulty,
    #[error("invalid monitor config: {0}")]
    Config(String),
}

/// 360 ranges; beam `j` (1..=360) looks `j` degrees counter-clockwise of
/// the heading, beam 360 is the heading itself.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    ranges: Vec<f64>,
}

impl LidarScan {
    pub fn new(ranges: Vec<f64>) -> Result<Self, MonitorError> {
        if ranges.len() != LIDAR_BEAMS {
            return Err(MonitorError::ScanLength(ranges.len()));
        }
        Ok(LidarScan { ranges })
    }

    pub fn uniform(range: f64) -> Self {
        LidarScan { ranges: vec![range; LIDAR_BEAMS] }
    }

    /// Range of beam `j`, wrapping any integer onto 1..=360.
    pub fn beam(&self, j: i32) -> f64 {
        self.ranges[wrap(j) as usize - 1]
    }

    pub fn set_beam(&mut self, j: i32, r: f64) {
        self.ranges[wrap(j) as usize - 1] = r;
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    pub fn into_ranges(self) -> Vec<f64> {
        self.ranges
    }
}

fn wrap(j: i32) -> u16 {
    (j - 1).rem_euclid(LIDAR_BEAMS as i32) as u16 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedCombiner {
    /// `|v|`
    #[default]
    Linear,
    /// Faster wheel: `max(|v − ωb/2|, |v + ωb/2|)`.
    OuterWheel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    /// P2 tolerance, m/s.
    pub delta: f64,
    /// P3 adjacency jump, m.
    pub gamma: f64,
    /// m/s²
    pub decel_max: f64,
    /// s
    pub react_latency: f64,
    pub gain: f64,
    /// m/s
    pub v_max: f64,
    /// Half-width of the forward cone, degrees.
    pub heading_window: u16,
    /// Use `expected − actual ≤ δ` instead of the absolute gap.
    pub p2_one_sided: bool,
    /// Extra travel time P1 budgets for, s. The robot holds an approved
    /// command for one control period before it is checked again.
    pub horizon: f64,
    pub speed_combiner: SpeedCombiner,
    /// m, used by the outer-wheel combiner.
    pub wheel_separation: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            delta: 0.05,
            gamma: 0.5,
            decel_max: 0.5,
            react_latency: 0.2,
            gain: 0.5,
            v_max: 0.22,
            heading_window: 30,
            p2_one_sided: false,
            horizon: 0.0,
            speed_combiner: SpeedCombiner::Linear,
            wheel_separation: 0.16,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<(), MonitorError> {
        let positive = [
            ("delta", self.delta),
            ("gamma", self.gamma),
            ("decel_max", self.decel_max),
            ("react_latency", self.react_latency),
            ("gain", self.gain),
            ("v_max", self.v_max),
            ("wheel_separation", self.wheel_separation),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(MonitorError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(MonitorError::Config(format!("horizon must be >= 0, got {}", self.horizon)));
        }
        if self.heading_window == 0 || self.heading_window > 180 {
            return Err(MonitorError::Config(format!("heading_window must be in 1..=180, got {}", self.heading_window)));
        }
        Ok(())
    }

    /// Scalar speed of a command under the configured combiner.
    pub fn command_speed(&self, cmd: ActuationCommand) -> f64 {
        scalar_speed(cmd.linear, cmd.angular, self.speed_combiner, self.wheel_separation)
    }
}

pub fn scalar_speed(linear: f64, angular: f64, combiner: SpeedCombiner, wheel_separation: f64) -> f64 {
    match combiner {
        SpeedCombiner::Linear => linear.abs(),
        SpeedCombiner::OuterWheel => {
            let half = angular * wheel_separation / 2.0;
            (linear - half).abs().max((linear + half).abs())
        }
    }
}

/// Minimum range over beams `360−window ..= 360` and `1 ..= window`.
pub fn ldist(scan: &LidarScan, window: u16) -> f64 {
    let w = window.min(180) as i32;
    (-w..=w).map(|j| scan.beam(j)).fold(f64::INFINITY, f64::min)
}

pub fn braking_distance(actual: f64, cfg: &MonitorConfig) -> f64 {
    actual * cfg.react_latency + actual * actual / (2.0 * cfg.decel_max)
}

pub fn check_p1(scan: &LidarScan, actual: f64, cfg: &MonitorConfig) -> bool {
    braking_distance(actual, cfg) + actual * cfg.horizon <= ldist(scan, cfg.heading_window)
}

/// Returns `(ok, expected − actual)`.
pub fn check_p2(expected: f64, actual: f64, cfg: &MonitorConfig) -> (bool, f64) {
    let diff = expected - actual;
    let ok = if cfg.p2_one_sided { diff <= cfg.delta } else { diff.abs() <= cfg.delta };
    (ok, diff)
}

/// Proportional correction of the commanded speed, capped at `v_max`.
pub fn optimize_actual_speed(expected: f64, actual: f64, cfg: &MonitorConfig) -> (f64, bool) {
    let diff = expected - actual;
    let adjusted = (expected + cfg.gain * diff).max(0.0).min(cfg.v_max);
    (adjusted, adjusted != expected)
}

/// Beams that disagree by more than γ with both neighbours.
pub fn check_p3(scan: &LidarScan, cfg: &MonitorConfig) -> BTreeSet<u16> {
    (1..=LIDAR_BEAMS as i32)
        .filter(|&j| {
            let l = scan.beam(j);
            (l - scan.beam(j + 1)).abs() > cfg.gamma && (l - scan.beam(j - 1)).abs() > cfg.gamma
        })
        .map(|j| j as u16)
        .collect()
}

/// Replaces each faulty beam with the mean of the nearest healthy beam on
/// either side.
pub fn sanitize_scan(scan: &LidarScan, faulty: &BTreeSet<u16>) -> Result<LidarScan, MonitorError> {
    if faulty.is_empty() {
        return Ok(scan.clone());
    }
    let healthy = |j: i32| !faulty.contains(&wrap(j));
    if !(1..=LIDAR_BEAMS as i32).any(healthy) {
        return Err(MonitorError::AllBeamsFaulty);
    }
    let mut out = scan.clone();
    for &j in faulty {
        let j = j as i32;
        let mut lo = j - 1;
        while !healthy(lo) {
            lo -= 1;
        }
        let mut hi = j + 1;
        while !healthy(hi) {
            hi += 1;
        }
        out.set_beam(j, (scan.beam(lo) + scan.beam(hi)) / 2.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub p1_ok: bool,
    pub p2_ok: bool,
    pub faulty_beams: BTreeSet<u16>,
    pub approved: bool,
    pub action: ActuationCommand,
    pub diff: f64,
}

impl Verdict {
    /// Rejected for P2 only: the action carries a corrected speed.
    pub fn corrected(&self) -> bool {
        !self.approved && self.p1_ok
    }
}

/// Outcome of P2 for one state, however it was computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2Decision {
    pub ok: bool,
    pub diff: f64,
    /// Corrected linear speed, used only when `ok` is false.
    pub adjusted: f64,
}

pub fn decide_p2(expected: f64, actual: f64, cfg: &MonitorConfig) -> P2Decision {
    let (ok, diff) = check_p2(expected, actual, cfg);
    P2Decision { ok, diff, adjusted: optimize_actual_speed(expected, actual, cfg).0 }
}

/// P3, sanitize, P2 with correction, then P1 on both the proposed and the
/// outgoing command. A P1 failure stops the robot regardless of P2.
pub fn evaluate(state: &RobotStateMsg, cfg: &MonitorConfig) -> Result<Verdict, MonitorError> {
    evaluate_with(state, cfg, decide_p2(state.expected_speed, state.actual_speed, cfg))
}

/// As [`evaluate`], with the P2 outcome supplied by the caller.
pub fn evaluate_with(state: &RobotStateMsg, cfg: &MonitorConfig, p2: P2Decision) -> Result<Verdict, MonitorError> {
    let scan = LidarScan::new(state.lidar.clone())?;
    let faulty = check_p3(&scan, cfg);
    let mut action = state.proposed;
    if !p2.ok {
        action.linear = p2.adjusted;
    }
    let p1_ok = match sanitize_scan(&scan, &faulty) {
        Ok(clean) => {
            check_p1(&clean, cfg.command_speed(state.proposed), cfg) && check_p1(&clean, cfg.command_speed(action), cfg)
        }
        Err(MonitorError::AllBeamsFaulty) => false,
        Err(e) => return Err(e),
    };
    if !p1_ok {
        action = ActuationCommand::STOP;
    }
    Ok(Verdict { p1_ok, p2_ok: p2.ok, faulty_beams: faulty, approved: p1_ok && p2.ok, action, diff: p2.diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msg::sample_state;
    use approx::assert_relative_eq;

    fn clear() -> LidarScan {
        LidarScan::uniform(3.5)
    }

    #[test]
    fn ldist_cone() {
        let cfg = MonitorConfig::default();
        assert_eq!(ldist(&clear(), 30), 3.5);
        let mut s = clear();
        s.set_beam(345, 0.4);
        assert_eq!(ldist(&s, 30), 0.4);
        let mut s = clear();
        s.set_beam(90, 0.1);
        assert_eq!(ldist(&s, cfg.heading_window), 3.5);
        for (j, inside) in [(329, false), (330, true), (30, true), (31, false), (360, true)] {
            let mut s = clear();
            s.set_beam(j, 1.0);
            assert_eq!(ldist(&s, 30) == 1.0, inside, "beam {j}");
        }
    }

    #[test]
    fn braking_distance_values() {
        let cfg = MonitorConfig::default();
        assert_eq!(braking_distance(0.0, &cfg), 0.0);
        assert_relative_eq!(braking_distance(0.22, &cfg), 0.0924, epsilon = 1e-12);
        assert!(braking_distance(0.2, &cfg) > 2.0 * braking_distance(0.1, &cfg));
    }

    #[test]
    fn p1_examples() {
        let cfg = MonitorConfig::default();
        assert!(check_p1(&clear(), 0.1, &cfg));
        let mut s = clear();
        s.set_beam(360, 0.01);
        assert!(check_p1(&s, 0.0, &cfg));
        assert!(!check_p1(&s, 0.22, &cfg));
    }

    #[test]
    fn p1_horizon_adds_travel() {
        let mut s = clear();
        s.set_beam(360, 0.1);
        let mut cfg = MonitorConfig::default();
        assert!(check_p1(&s, 0.22, &cfg));
        cfg.horizon = 0.1;
        assert!(!check_p1(&s, 0.22, &cfg));
    }

    #[test]
    fn p2_examples() {
        let cfg = MonitorConfig { delta: 2.0, ..Default::default() };
        assert_eq!(check_p2(1.0, 0.0, &cfg), (true, 1.0));
        assert_eq!(check_p2(1.0, 5.0, &cfg), (false, -4.0));
        assert_eq!(check_p2(0.3, 0.3, &MonitorConfig::default()), (true, 0.0));
    }

    #[test]
    fn p2_one_sided_ignores_overshoot() {
        let cfg = MonitorConfig { delta: 2.0, p2_one_sided: true, ..Default::default() };
        assert_eq!(check_p2(1.0, 5.0, &cfg), (true, -4.0));
        assert_eq!(check_p2(5.0, 1.0, &cfg), (false, 4.0));
    }

    #[test]
    fn correction_law() {
        let cfg = MonitorConfig::default();
        assert_eq!(optimize_actual_speed(0.10, 0.04, &cfg), (0.13, true));
        assert_eq!(optimize_actual_speed(0.20, 0.00, &cfg), (0.22, true));
        assert_eq!(optimize_actual_speed(0.10, 0.10, &cfg), (0.10, false));
    }

    #[test]
    fn p3_examples() {
        let cfg = MonitorConfig::default();
        assert!(check_p3(&clear(), &cfg).is_empty());
        let mut s = clear();
        s.set_beam(17, 0.2);
        assert_eq!(check_p3(&s, &cfg), BTreeSet::from([17]));
        s.set_beam(18, 0.2);
        assert!(check_p3(&s, &cfg).is_empty());
    }

    #[test]
    fn p3_wraps_around() {
        let cfg = MonitorConfig::default();
        let mut s = clear();
        s.set_beam(360, 0.2);
        assert_eq!(check_p3(&s, &cfg), BTreeSet::from([360]));
        let mut s = clear();
        s.set_beam(1, 0.2);
        assert_eq!(check_p3(&s, &cfg), BTreeSet::from([1]));
    }

    #[test]
    fn sanitize_examples() {
        let mut s = clear();
        assert_eq!(sanitize_scan(&s, &BTreeSet::new()).unwrap(), s);
        s.set_beam(17, 0.2);
        assert_eq!(sanitize_scan(&s, &BTreeSet::from([17])).unwrap().beam(17), 3.5);
        s.set_beam(16, 3.0);
        s.set_beam(18, 4.0);
        let out = sanitize_scan(&s, &BTreeSet::from([17])).unwrap();
        assert_eq!(out.beam(17), 3.5);
        assert_eq!(out.beam(16), 3.0);
    }

    #[test]
    fn sanitize_skips_faulty_runs() {
        let mut s = clear();
        s.set_beam(9, 1.0);
        s.set_beam(12, 2.0);
        let out = sanitize_scan(&s, &BTreeSet::from([10, 11])).unwrap();
        assert_eq!(out.beam(10), 1.5);
        assert_eq!(out.beam(11), 1.5);
        let all: BTreeSet<u16> = (1..=360).collect();
        assert_eq!(sanitize_scan(&s, &all), Err(MonitorError::AllBeamsFaulty));
    }

    #[test]
    fn evaluate_nominal() {
        let v = evaluate(&sample_state(1), &MonitorConfig::default()).unwrap();
        assert!(v.approved && v.p1_ok && v.p2_ok);
        assert_eq!(v.action, ActuationCommand::new(0.1, 0.0));
        assert!(!v.corrected());
    }

    #[test]
    fn evaluate_corrects_lagging_speed() {
        let mut st = sample_state(1);
        st.actual_speed = 0.0;
        let v = evaluate(&st, &MonitorConfig::default()).unwrap();
        assert!(!v.approved && !v.p2_ok && v.p1_ok);
        assert_relative_eq!(v.action.linear, 0.15, epsilon = 1e-12);
        assert!(v.corrected());
    }

    #[test]
    fn evaluate_stops_before_wall() {
        let mut st = sample_state(1);
        st.proposed = ActuationCommand::new(0.22, 0.0);
        st.expected_speed = 0.22;
        st.actual_speed = 0.22;
        st.lidar[359] = 0.01;
        st.lidar[0] = 0.01;
        let v = evaluate(&st, &MonitorConfig::default()).unwrap();
        assert!(!v.approved && !v.p1_ok);
        assert_eq!(v.action, ActuationCommand::STOP);
    }

    #[test]
    fn evaluate_p1_wins_over_p2() {
        let mut st = sample_state(1);
        st.actual_speed = 0.0;
        st.lidar[359] = 0.02;
        st.lidar[0] = 0.02;
        let v = evaluate(&st, &MonitorConfig::default()).unwrap();
        assert!(!v.p1_ok && !v.p2_ok);
        assert_eq!(v.action, ActuationCommand::STOP);
    }

    #[test]
    fn evaluate_sanitizes_spike_before_p1() {
        let mut st = sample_state(1);
        st.lidar[359] = 0.01;
        let v = evaluate(&st, &MonitorConfig::default()).unwrap();
        assert_eq!(v.faulty_beams, BTreeSet::from([360]));
        assert!(v.approved);
    }

    #[test]
    fn evaluate_rejects_bad_scan() {
        let mut st = sample_state(1);
        st.lidar.truncate(359);
        assert_eq!(evaluate(&st, &MonitorConfig::default()), Err(MonitorError::ScanLength(359)));
    }

    #[test]
    fn outer_wheel_speed() {
        assert_eq!(scalar_speed(0.1, 1.0, SpeedCombiner::OuterWheel, 0.2), 0.2);
        assert_eq!(scalar_speed(-0.1, 1.0, SpeedCombiner::Linear, 0.2), 0.1);
    }

    #[test]
    fn config_validation() {
        assert!(MonitorConfig::default().validate().is_ok());
        assert!(MonitorConfig { delta: 0.0, ..Default::default() }.validate().is_err());
        assert!(MonitorConfig { heading_window: 181, ..Default::default() }.validate().is_err());
    }
}
