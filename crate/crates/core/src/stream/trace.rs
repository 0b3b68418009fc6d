//! Timestamped event traces in the playground text format:
//! one `<t>: <name> = <value>` event per line.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::value::{Timestamp, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedEvent {
    pub t: Timestamp,
    pub value: Value,
}

impl TimedEvent {
    pub fn new(t: Timestamp, value: Value) -> Self {
        TimedEvent { t, value }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: malformed event `{text}` (expected `<t>: <name> = <value>`)")]
    Malformed { line: usize, text: String },
    #[error("line {line}: timestamp {t} precedes previous timestamp {prev}")]
    Regression { line: usize, t: Timestamp, prev: Timestamp },
    #[error("line {line}: second event on `{stream}` at {t}")]
    Duplicate { line: usize, stream: String, t: Timestamp },
}

/// Ordered sequence of `(stream, event)` entries.
///
/// Timestamps never decrease and each stream has at most one event per
/// timestamp; [`Trace::push`] enforces both.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    entries: Vec<(String, TimedEvent)>,
    at_last: HashSet<String>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(String, TimedEvent)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_time(&self) -> Option<Timestamp> {
        self.entries.last().map(|(_, e)| e.t)
    }

    /// Appends an event. `line` is only used for error reporting.
    fn push_at(&mut self, stream: &str, ev: TimedEvent, line: usize) -> Result<(), TraceError> {
        if let Some(prev) = self.last_time() {
            if ev.t < prev {
                return Err(TraceError::Regression { line, t: ev.t, prev });
            }
            if ev.t > prev {
                self.at_last.clear();
            }
        }
        if !self.at_last.insert(stream.to_string()) {
            return Err(TraceError::Duplicate { line, stream: stream.to_string(), t: ev.t });
        }
        self.entries.push((stream.to_string(), ev));
        Ok(())
    }

    pub fn push(&mut self, stream: &str, ev: TimedEvent) -> Result<(), TraceError> {
        let line = self.entries.len() + 1;
        self.push_at(stream, ev, line)
    }

    /// Events of one stream, in order.
    pub fn stream<'a>(&'a self, name: &'a str) -> impl Iterator<Item = TimedEvent> + 'a {
        self.entries.iter().filter(move |(n, _)| n == name).map(|(_, e)| *e)
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a (String, TimedEvent);
    type IntoIter = std::slice::Iter<'a, (String, TimedEvent)>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    let mut trace = Trace::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() {
            continue;
        }
        let malformed = || TraceError::Malformed { line, text: body.to_string() };
        let (t, rest) = body.split_once(':').ok_or_else(malformed)?;
        let (name, value) = rest.split_once('=').ok_or_else(malformed)?;
        let name = name.trim();
        if !is_ident(name) {
            return Err(malformed());
        }
        let t: Timestamp = t.trim().parse().map_err(|_| malformed())?;
        let value: Value = value.trim().parse().map_err(|_| malformed())?;
        trace.push_at(name, TimedEvent::new(t, value), line)?;
    }
    Ok(trace)
}

pub fn format_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for (name, ev) in trace {
        let _ = writeln!(out, "{}: {} = {}", ev.t, name, ev.value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_line_parses() {
        let tr = parse_trace("0: actualSpeed = 0").unwrap();
        assert_eq!(tr.len(), 1);
        let (name, ev) = &tr.entries()[0];
        assert_eq!(name, "actualSpeed");
        assert_eq!(ev.t, Timestamp::ZERO);
        assert_eq!(ev.value, Value::Int(0));
    }

    #[test]
    fn empty_and_blank_lines() {
        assert!(parse_trace("").unwrap().is_empty());
        assert_eq!(parse_trace("\n\n1: a = 1\n\n").unwrap().len(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse_trace("2: x 5") {
            Err(TraceError::Malformed { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_trace("1: a = 1\nfoo") {
            Err(TraceError::Malformed { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn regression_and_duplicates_rejected() {
        assert!(matches!(
            parse_trace("2: a = 1\n1: a = 2"),
            Err(TraceError::Regression { line: 2, .. })
        ));
        assert!(matches!(
            parse_trace("1: a = 1\n1: a = 2"),
            Err(TraceError::Duplicate { line: 2, .. })
        ));
        assert!(parse_trace("1: a = 1\n1: b = 2\n2: a = 3").is_ok());
    }
}
