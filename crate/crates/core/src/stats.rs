//! Anonymous usage events and their spreadsheet export.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::append_line;
use crate::model::{InstitutionId, Issn};
use crate::policy::DeliveryMode;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid range: {from} is after {to}")]
    InvalidRange {
        from: DateTime<Utc>,
        to: DateTime<Utc>,
    },
    #[error("event log unavailable: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Browse,
    Search,
    RequestPlanned(DeliveryMode),
    Downloaded,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Browse => f.write_str("Browse"),
            EventKind::Search => f.write_str("Search"),
            EventKind::RequestPlanned(m) => write!(f, "RequestPlanned:{}", m.as_str()),
            EventKind::Downloaded => f.write_str("Downloaded"),
        }
    }
}

/// One usage trace. Carries no user identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessEvent {
    pub timestamp: DateTime<Utc>,
    pub institution: Option<InstitutionId>,
    pub issn: Option<Issn>,
    pub kind: EventKind,
}

/// Append-only event log, mirrored to a JSON-lines file when a path is set.
#[derive(Debug, Default)]
pub struct EventLog {
    path: Option<PathBuf>,
    events: Mutex<Vec<AccessEvent>>,
}

impl EventLog {
    pub fn in_memory() -> Self {
        EventLog::default()
    }

    pub fn open(path: PathBuf) -> Result<Self, StatsError> {
        let mut events = Vec::new();
        if path.exists() {
            for line in std::fs::read_to_string(&path)?
                .lines()
                .filter(|l| !l.trim().is_empty())
            {
                let e: AccessEvent = serde_json::from_str(line)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
                events.push(e);
            }
        }
        Ok(EventLog {
            path: Some(path),
            events: Mutex::new(events),
        })
    }

    pub fn append(&self, event: AccessEvent) -> Result<(), StatsError> {
        let mut events = self.events.lock().expect("event log poisoned");
        if let Some(path) = &self.path {
            append_line(
                path,
                &serde_json::to_string(&event).expect("event serializes"),
            )?;
        }
        events.push(event);
        Ok(())
    }

    pub fn snapshot(&self) -> Vec<AccessEvent> {
        self.events.lock().expect("event log poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.events.lock().expect("event log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatRow {
    pub institution: String,
    pub issn: String,
    pub event_kind: String,
    pub count: u64,
}

pub const UNAFFILIATED: &str = "unaffiliated";

/// Aggregates events with `from <= timestamp < to`.
pub fn aggregate(
    events: &[AccessEvent],
    from: DateTime<Utc>,
    to: DateTime<Utc>,
) -> Result<Vec<StatRow>, StatsError> {
    if from > to {
        return Err(StatsError::InvalidRange { from, to });
    }
    let mut counts: BTreeMap<(String, String, String), u64> = BTreeMap::new();
    for e in events
        .iter()
        .filter(|e| e.timestamp >= from && e.timestamp < to)
    {
        let key = (
            e.institution
                .as_ref()
                .map_or_else(|| UNAFFILIATED.to_string(), |i| i.to_string()),
            e.issn.as_ref().map(|i| i.to_string()).unwrap_or_default(),
            e.kind.to_string(),
        );
        *counts.entry(key).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|((institution, issn, event_kind), count)| StatRow {
            institution,
            issn,
            event_kind,
            count,
        })
        .collect())
}

/// Comma-separated export with a header row.
pub fn export_stats(
    events: &[AccessEvent],
    from: DateTime<Utc>,
    to: DateTime<Utc>,
) -> Result<String, StatsError> {
    let rows = aggregate(events, from, to)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(true)
        .from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["institution", "issn", "event_kind", "count"])
            .expect("in-memory write");
    }
    for r in &rows {
        w.serialize(r).expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    fn ev(min: i64, inst: &str, issn: &str, kind: EventKind) -> AccessEvent {
        AccessEvent {
            timestamp: Utc.with_ymd_and_hms(2001, 10, 15, 10, 0, 0).unwrap()
                + Duration::minutes(min),
            institution: Some(inst.into()),
            issn: Some(issn.parse().unwrap()),
            kind,
        }
    }

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2001, 10, 15, 0, 0, 0).unwrap()
    }

    #[test]
    fn three_events_two_rows() {
        let events = vec![
            ev(1, "A", "0000-0019", EventKind::Browse),
            ev(2, "A", "0000-0019", EventKind::Browse),
            ev(3, "D", "0000-0035", EventKind::Downloaded),
        ];
        let csv = export_stats(&events, t0(), t0() + Duration::days(1)).unwrap();
        assert_eq!(
            csv,
            "institution,issn,event_kind,count\nA,0000-0019,Browse,2\nD,0000-0035,Downloaded,1\n"
        );
    }

    #[test]
    fn empty_range_is_header_only() {
        let events = vec![ev(1, "A", "0000-0019", EventKind::Browse)];
        assert_eq!(
            export_stats(&events, t0(), t0()).unwrap(),
            "institution,issn,event_kind,count\n"
        );
        assert!(matches!(
            export_stats(&events, t0() + Duration::days(1), t0()),
            Err(StatsError::InvalidRange { .. })
        ));
    }

    #[test]
    fn window_is_half_open() {
        let e = ev(0, "A", "0000-0019", EventKind::Search);
        let at = e.timestamp;
        assert_eq!(
            aggregate(&[e.clone()], at, at + Duration::seconds(1))
                .unwrap()
                .len(),
            1
        );
        assert!(aggregate(&[e], at - Duration::seconds(1), at)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn log_round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let log = EventLog::open(path.clone()).unwrap();
        log.append(ev(
            1,
            "A",
            "0000-0019",
            EventKind::RequestPlanned(DeliveryMode::PhotocopyPostalMail),
        ))
        .unwrap();
        let reopened = EventLog::open(path).unwrap();
        assert_eq!(reopened.snapshot(), log.snapshot());
    }
}
