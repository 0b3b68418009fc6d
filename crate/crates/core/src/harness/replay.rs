//! Mock-robot CSV: one state per row, replayed open-loop.

use std::io::{Read, Write};
use std::time::{Duration, Instant};

use crate::msg::{ActuationCommand, RobotStateMsg, VerdictMsg, LIDAR_BEAMS, META_FIELDS};
use crate::sim::TwinLink;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header has {found} columns, expected {expected}")]
    Header { expected: usize, found: usize },
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("row {row}: transport failure: {msg}")]
    Transport { row: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub t: f64,
    pub lidar: Vec<f64>,
    pub expected_speed: f64,
    pub actual_speed: f64,
    pub proposed: ActuationCommand,
    pub meta: Vec<String>,
}

pub fn replay_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=LIDAR_BEAMS).map(|j| format!("lidar_{j}")));
    h.extend(["expected_speed", "actual_speed", "proposed_linear", "proposed_angular"].map(String::from));
    h.extend((1..=META_FIELDS).map(|j| format!("meta_{j}")));
    h
}

const COLUMNS: usize = 1 + LIDAR_BEAMS + 4 + META_FIELDS;

impl ReplayRow {
    pub fn from_state(s: &RobotStateMsg) -> Self {
        ReplayRow {
            t: s.t,
            lidar: s.lidar.clone(),
            expected_speed: s.expected_speed,
            actual_speed: s.actual_speed,
            proposed: s.proposed,
            meta: s.meta.clone(),
        }
    }

    pub fn to_state(&self, seq: u64) -> RobotStateMsg {
        RobotStateMsg {
            seq,
            t: self.t,
            expected_linear: self.proposed.linear,
            expected_angular: self.proposed.angular,
            actual_linear: self.actual_speed,
            actual_angular: 0.0,
            expected_speed: self.expected_speed,
            actual_speed: self.actual_speed,
            lidar: self.lidar.clone(),
            proposed: self.proposed,
            meta: self.meta.clone(),
        }
    }

    fn record(&self) -> Vec<String> {
        let mut r = Vec::with_capacity(COLUMNS);
        r.push(self.t.to_string());
        r.extend(self.lidar.iter().map(f64::to_string));
        for v in [self.expected_speed, self.actual_speed, self.proposed.linear, self.proposed.angular] {
            r.push(v.to_string());
        }
        r.extend(self.meta.iter().cloned());
        r
    }
}

/// Rows are numbered from 1, the header being row 0.
pub fn read_replay_csv<R: Read>(input: R) -> Result<Vec<ReplayRow>, ReplayError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let found = rdr.headers()?.len();
    if found == 0 {
        return Ok(Vec::new());
    }
    if found != COLUMNS {
        return Err(ReplayError::Header { expected: COLUMNS, found });
    }
    let mut rows: Vec<ReplayRow> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let err = |msg: String| ReplayError::Row { row, msg };
        if rec.len() != COLUMNS {
            return Err(err(format!("{} columns, expected {COLUMNS}", rec.len())));
        }
        let num = |k: usize| -> Result<f64, ReplayError> {
            let s = rec[k].trim();
            s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(format!("column {} is not a number: `{s}`", k + 1)))
        };
        let t = num(0)?;
        let lidar = (1..=LIDAR_BEAMS).map(num).collect::<Result<Vec<_>, _>>()?;
        let b = 1 + LIDAR_BEAMS;
        let r = ReplayRow {
            t,
            lidar,
            expected_speed: num(b)?,
            actual_speed: num(b + 1)?,
            proposed: ActuationCommand::new(num(b + 2)?, num(b + 3)?),
            meta: (b + 4..COLUMNS).map(|k| rec[k].to_string()).collect(),
        };
        if let Some(prev) = rows.last() {
            if r.t < prev.t {
                return Err(err(format!("time goes backwards ({} < {})", r.t, prev.t)));
            }
        }
        rows.push(r);
    }
    Ok(rows)
}

pub fn write_replay_csv<W: Write>(out: W, rows: &[ReplayRow]) -> Result<(), ReplayError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(replay_header())?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayReport {
    pub sent: usize,
    pub verdicts: Vec<VerdictMsg>,
    pub timeouts: usize,
}

/// Sends every row as a state with `seq` = row index, pacing by the row
/// time step divided by `rate` (0 = no pacing). Verdicts are collected,
/// never fed back.
pub fn replay(rows: &[ReplayRow], link: &mut dyn TwinLink, rate: f64) -> Result<ReplayReport, ReplayError> {
    let mut report = ReplayReport::default();
    let start = Instant::now();
    for (i, row) in rows.iter().enumerate() {
        if rate > 0.0 {
            let due = Duration::from_secs_f64(((row.t - rows[0].t) / rate).max(0.0));
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                std::thread::sleep(wait);
            }
        }
        let state = row.to_state(i as u64);
        match link.exchange(&state) {
            Ok(Some(v)) => report.verdicts.push(v),
            Ok(None) => report.timeouts += 1,
            Err(e) => return Err(ReplayError::Transport { row: i + 1, msg: e.to_string() }),
        }
        report.sent += 1;
    }
    Ok(report)
}
