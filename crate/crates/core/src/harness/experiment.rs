use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Serialize;

use super::replay::{write_replay_csv, ReplayError, ReplayRow};
use crate::msg::RobotStateMsg;
use crate::sim::{Mode, Scenario, Simulator, TickRecord, TwinLink, TICK_CSV_HEADER};
use crate::twin::{attach_inline, BusLink, LogStore, MemoryBus, RecordKind, ServiceError, StoreError, TwinConfig, TwinService, ALL_TIME};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("twin link: {0}")]
    Link(String),
    #[error("writing {path}: {msg}")]
    Output { path: String, msg: String },
    #[error(transparent)]
    Mse(#[from] MseError),
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MseError {
    #[error("series lengths differ ({0} vs {1})")]
    Length(usize, usize),
    #[error("empty series")]
    Empty,
}

pub fn compute_mse(expected: &[f64], actual: &[f64]) -> Result<f64, MseError> {
    if expected.len() != actual.len() {
        return Err(MseError::Length(expected.len(), actual.len()));
    }
    if expected.is_empty() {
        return Err(MseError::Empty);
    }
    Ok(expected.iter().zip(actual).map(|(e, a)| (e - a).powi(2)).sum::<f64>() / expected.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub ticks: Vec<TickRecord>,
    pub mse: f64,
    pub p1_violations: usize,
    pub p2_violations: usize,
    pub corrected: usize,
    pub collisions: usize,
    pub fail_safe: usize,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    record: &'static str,
    scenario: &'a str,
    mode: &'static str,
    seed: u64,
    ticks: usize,
    mse: f64,
    p1_violations: usize,
    p2_violations: usize,
    corrected: usize,
    collisions: usize,
    fail_safe: usize,
}

impl ExperimentResult {
    pub fn from_ticks(scenario: &str, mode: Mode, seed: u64, ticks: Vec<TickRecord>) -> Result<Self, MseError> {
        let e: Vec<f64> = ticks.iter().map(|r| r.expected_speed).collect();
        let a: Vec<f64> = ticks.iter().map(|r| r.actual_speed).collect();
        let count = |f: fn(&TickRecord) -> bool| ticks.iter().filter(|r| f(r)).count();
        Ok(ExperimentResult {
            scenario: scenario.to_string(),
            mode,
            seed,
            mse: compute_mse(&e, &a)?,
            p1_violations: count(|r| !r.p1_ok),
            p2_violations: count(|r| !r.p2_ok),
            corrected: count(|r| r.corrected),
            collisions: count(|r| r.collision),
            fail_safe: count(|r| r.fail_safe),
            ticks,
        })
    }

    /// One line-delimited summary record.
    pub fn summary_line(&self) -> String {
        serde_json::to_string(&Summary {
            record: "experiment",
            scenario: &self.scenario,
            mode: self.mode.name(),
            seed: self.seed,
            ticks: self.ticks.len(),
            mse: self.mse,
            p1_violations: self.p1_violations,
            p2_violations: self.p2_violations,
            corrected: self.corrected,
            collisions: self.collisions,
            fail_safe: self.fail_safe,
        })
        .expect("summary serializes")
    }

    pub fn write_ticks_csv(&self, path: &Path) -> Result<(), ExperimentError> {
        let out = |e: csv::Error| ExperimentError::Output { path: path.display().to_string(), msg: e.to_string() };
        let mut w = csv::Writer::from_path(path).map_err(out)?;
        w.write_record(TICK_CSV_HEADER).map_err(out)?;
        for r in &self.ticks {
            w.write_record(r.csv_row()).map_err(out)?;
        }
        w.flush().map_err(|e| out(e.into()))
    }
}

/// Drives the simulator for the scenario's duration through `link`.
pub fn run_with_link(scenario: &Scenario, mode: Mode, seed: u64, link: Option<&mut dyn TwinLink>) -> Result<ExperimentResult, MseError> {
    let mut sim = Simulator::new(scenario, seed);
    let ticks = sim.run(mode, link, scenario.ticks());
    ExperimentResult::from_ticks(&scenario.name, mode, seed, ticks)
}

pub struct Experiment {
    pub result: ExperimentResult,
    /// The twin that judged an augmented run.
    pub twin: Option<Arc<Mutex<TwinService>>>,
}

/// Twin settings an experiment uses: the scenario's monitor constants on
/// top of `base`.
pub fn twin_config_for(scenario: &Scenario, base: &TwinConfig) -> TwinConfig {
    TwinConfig { monitor: scenario.monitor.clone(), ..base.clone() }
}

/// Runs one mode. Augmented runs talk to a fresh twin over the in-memory
/// bus, logging into `store`.
pub fn run_experiment(
    scenario: &Scenario,
    mode: Mode,
    seed: u64,
    twin: &TwinConfig,
    store: LogStore,
) -> Result<Experiment, ExperimentError> {
    match mode {
        Mode::Default => Ok(Experiment { result: run_with_link(scenario, mode, seed, None)?, twin: None }),
        Mode::Augmented => {
            let bus = MemoryBus::new();
            let cfg = twin_config_for(scenario, twin);
            let service = attach_inline(TwinService::new(cfg.clone(), store)?, bus.clone())?;
            let mut link = BusLink::new(bus, &cfg.topics, Duration::from_secs(1)).map_err(|e| ExperimentError::Link(e.to_string()))?;
            let result = run_with_link(scenario, mode, seed, Some(&mut link))?;
            Ok(Experiment { result, twin: Some(service) })
        }
    }
}

/// Runs one mode and writes `<mode>_ticks.csv`, appends to `summary.jsonl`
/// and, for augmented runs, keeps `<mode>_twin.jsonl` and writes
/// `<mode>_states.csv` in replay format.
pub fn run_experiment_to_dir(
    scenario: &Scenario,
    mode: Mode,
    seed: u64,
    twin: &TwinConfig,
    out: &Path,
) -> Result<ExperimentResult, ExperimentError> {
    let io = |p: &Path, e: &dyn std::fmt::Display| ExperimentError::Output { path: p.display().to_string(), msg: e.to_string() };
    fs::create_dir_all(out).map_err(|e| io(out, &e))?;
    let store = if mode == Mode::Augmented {
        let p = out.join(format!("{}_twin.jsonl", mode.name()));
        if p.exists() {
            fs::remove_file(&p).map_err(|e| io(&p, &e))?;
        }
        LogStore::open(&p)?
    } else {
        LogStore::memory()
    };
    let exp = run_experiment(scenario, mode, seed, twin, store)?;
    exp.result.write_ticks_csv(&out.join(format!("{}_ticks.csv", mode.name())))?;
    if let Some(svc) = &exp.twin {
        let svc = svc.lock().unwrap();
        let rows = svc
            .store()
            .query(ALL_TIME, Some(RecordKind::State))?
            .into_iter()
            .map(|r| serde_json::from_value::<RobotStateMsg>(r.data).map(|s| ReplayRow::from_state(&s)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| io(out, &e))?;
        let p = out.join(format!("{}_states.csv", mode.name()));
        let f = fs::File::create(&p).map_err(|e| io(&p, &e))?;
        write_replay_csv(f, &rows).map_err(|e: ReplayError| io(&p, &e))?;
    }
    append_summary(out, &exp.result.summary_line())?;
    Ok(exp.result)
}

pub(crate) fn append_summary(out: &Path, line: &str) -> Result<(), ExperimentError> {
    use std::io::Write;
    let p = out.join("summary.jsonl");
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&p)
        .map_err(|e| ExperimentError::Output { path: p.display().to_string(), msg: e.to_string() })?;
    writeln!(f, "{line}").map_err(|e| ExperimentError::Output { path: p.display().to_string(), msg: e.to_string() })
}

/// Maximal runs of ticks with `expected ≥ min_expected` and
/// `actual < ratio · expected`, as `(start t, duration)`.
pub fn stuck_intervals(ticks: &[TickRecord], dt: f64, min_expected: f64, ratio: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start: Option<(f64, usize)> = None;
    for r in ticks {
        let stuck = r.expected_speed >= min_expected && r.actual_speed < ratio * r.expected_speed;
        match (stuck, start) {
            (true, None) => start = Some((r.t, 1)),
            (true, Some((t0, n))) => start = Some((t0, n + 1)),
            (false, Some((t0, n))) => {
                out.push((t0, n as f64 * dt));
                start = None;
            }
            (false, None) => {}
        }
    }
    if let Some((t0, n)) = start {
        out.push((t0, n as f64 * dt));
    }
    out
}
