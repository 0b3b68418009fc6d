//! Append-only line-delimited record log.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    State,
    Verdict,
    Deadletter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    pub t: f64,
    pub data: serde_json::Value,
}

impl LogRecord {
    pub fn matches(&self, range: &Range<f64>, kind: Option<RecordKind>) -> bool {
        range.contains(&self.t) && kind.is_none_or(|k| k == self.kind)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("log I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("log line {line}: {source}")]
    Corrupt { line: usize, source: serde_json::Error },
}

enum Sink {
    Memory(Vec<String>),
    File { path: PathBuf, file: File },
}

/// Every append is flushed before returning. Write failures mark the store
/// degraded instead of propagating: the twin keeps monitoring.
pub struct LogStore {
    sink: Sink,
    degraded: bool,
    appended: u64,
}

impl LogStore {
    pub fn memory() -> Self {
        LogStore { sink: Sink::Memory(Vec::new()), degraded: false, appended: 0 }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(LogStore { sink: Sink::File { path, file }, degraded: false, appended: 0 })
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.sink {
            Sink::File { path, .. } => Some(path),
            Sink::Memory(_) => None,
        }
    }

    pub fn is_degraded(&self) -> bool {
        self.degraded
    }

    pub fn appended(&self) -> u64 {
        self.appended
    }

    pub fn append(&mut self, rec: &LogRecord) -> bool {
        let mut line = serde_json::to_string(rec).expect("records serialize");
        line.push('\n');
        let res = match &mut self.sink {
            Sink::Memory(lines) => {
                lines.push(line);
                Ok(())
            }
            Sink::File { file, .. } => file.write_all(line.as_bytes()).and_then(|_| file.flush()),
        };
        match res {
            Ok(()) => {
                self.appended += 1;
                true
            }
            Err(e) => {
                if !self.degraded {
                    log::error!("log store degraded: {e}");
                }
                self.degraded = true;
                false
            }
        }
    }

    pub fn flush(&mut self) {
        if let Sink::File { file, .. } = &mut self.sink {
            if let Err(e) = file.sync_data() {
                log::error!("log sync failed: {e}");
                self.degraded = true;
            }
        }
    }

    /// Records with `t` in `range` (and of `kind`, if given), in write order.
    pub fn query(&self, range: Range<f64>, kind: Option<RecordKind>) -> Result<Vec<LogRecord>, StoreError> {
        match &self.sink {
            Sink::Memory(lines) => parse_lines(lines.iter().map(|l| Ok(l.trim_end().to_string())), range, kind),
            Sink::File { path, .. } => query_file(path, range, kind),
        }
    }

    /// Raw lines of the in-memory sink.
    pub fn memory_lines(&self) -> Option<&[String]> {
        match &self.sink {
            Sink::Memory(lines) => Some(lines),
            Sink::File { .. } => None,
        }
    }
}

pub fn query_file(path: impl AsRef<Path>, range: Range<f64>, kind: Option<RecordKind>) -> Result<Vec<LogRecord>, StoreError> {
    let reader = BufReader::new(File::open(path)?);
    parse_lines(reader.lines(), range, kind)
}

fn parse_lines<I>(lines: I, range: Range<f64>, kind: Option<RecordKind>) -> Result<Vec<LogRecord>, StoreError>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogRecord = serde_json::from_str(&line).map_err(|source| StoreError::Corrupt { line: i + 1, source })?;
        if rec.matches(&range, kind) {
            out.push(rec);
        }
    }
    Ok(out)
}

pub const ALL_TIME: Range<f64> = f64::NEG_INFINITY..f64::INFINITY;

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(kind: RecordKind, seq: u64, t: f64) -> LogRecord {
        LogRecord { kind, seq: Some(seq), t, data: serde_json::json!({"seq": seq}) }
    }

    fn fill(store: &mut LogStore) {
        for i in 0..3 {
            assert!(store.append(&rec(RecordKind::State, i, i as f64 * 10.0)));
            assert!(store.append(&rec(RecordKind::Verdict, i, i as f64 * 10.0)));
        }
    }

    #[test]
    fn memory_query_all_in_order() {
        let mut s = LogStore::memory();
        fill(&mut s);
        let all = s.query(ALL_TIME, None).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all[1], rec(RecordKind::Verdict, 0, 0.0));
        assert_eq!(all[4].seq, Some(2));
    }

    #[test]
    fn file_time_range_and_kind() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = LogStore::open(dir.path().join("log.jsonl")).unwrap();
        fill(&mut s);
        let hits = s.query(10.0..20.0, None).unwrap();
        assert_eq!(hits.len(), 2);
        assert!(hits.iter().all(|r| r.t == 10.0));
        let verdicts = s.query(ALL_TIME, Some(RecordKind::Verdict)).unwrap();
        assert_eq!(verdicts.iter().map(|r| r.seq.unwrap()).collect::<Vec<_>>(), [0, 1, 2]);
    }

    #[test]
    fn reopen_appends() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.jsonl");
        fill(&mut LogStore::open(&p).unwrap());
        fill(&mut LogStore::open(&p).unwrap());
        assert_eq!(query_file(&p, ALL_TIME, None).unwrap().len(), 12);
    }

    #[test]
    fn write_failure_degrades() {
        let mut s = LogStore::open("/dev/full").unwrap();
        assert!(!s.append(&rec(RecordKind::State, 0, 0.0)));
        assert!(s.is_degraded());
        assert_eq!(s.appended(), 0);
    }

    #[test]
    fn corrupt_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.jsonl");
        std::fs::write(&p, "{\"kind\":\"state\",\"t\":0,\"data\":null}\nnot json\n").unwrap();
        assert!(matches!(query_file(&p, ALL_TIME, None), Err(StoreError::Corrupt { line: 2, .. })));
    }
}
