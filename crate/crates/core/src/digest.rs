//! Alert subscriptions and the periodic digest of newly arrived summaries.
//!
//! Each run covers the window `(watermark, now]`. The watermark only moves
//! when every message of the run was accepted by the sink; pairs already
//! delivered during a failed run are remembered so the retry does not send
//! them again.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::write_atomic;
use crate::ingest::PivotSummary;
use crate::mail::{MailMessage, MailSink};
use crate::model::{Issn, SummaryKey};

#[derive(Debug, Error)]
pub enum DigestError {
    #[error("mail sink unavailable: {0}")]
    SinkUnavailable(String),
    #[error("run instant {now} precedes the watermark {watermark}")]
    ClockBehindWatermark {
        now: DateTime<Utc>,
        watermark: DateTime<Utc>,
    },
    #[error("digest state unavailable: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlertSubscription {
    pub id: u64,
    pub email: String,
    pub issns: Vec<Issn>,
    pub created: DateTime<Utc>,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigestMessage {
    pub email: String,
    pub summaries: Vec<SummaryKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigestRun {
    pub run_id: u64,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub messages: Vec<DigestMessage>,
    pub dispatched: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigestState {
    pub watermark: DateTime<Utc>,
    pub next_run_id: u64,
    /// (email, summary) pairs already sent for the still-open window.
    #[serde(default)]
    pub delivered_pending: BTreeSet<(String, SummaryKey)>,
}

impl DigestState {
    pub fn bootstrap(installed: DateTime<Utc>) -> Self {
        DigestState {
            watermark: installed,
            next_run_id: 1,
            delivered_pending: BTreeSet::new(),
        }
    }
}

/// Digest state persisted as JSON; a missing file means a fresh install.
#[derive(Debug, Clone)]
pub struct DigestStateFile {
    path: PathBuf,
}

impl DigestStateFile {
    pub fn new(path: PathBuf) -> Self {
        DigestStateFile { path }
    }

    pub fn load(&self, installed: DateTime<Utc>) -> Result<DigestState, DigestError> {
        if !self.path.exists() {
            return Ok(DigestState::bootstrap(installed));
        }
        let text = std::fs::read(&self.path)?;
        serde_json::from_slice(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e).into())
    }

    pub fn save(&self, state: &DigestState) -> Result<(), DigestError> {
        write_atomic(
            &self.path,
            &serde_json::to_vec_pretty(state).expect("state serializes"),
        )?;
        Ok(())
    }
}

/// Plain-text digest body. One heading per issue, one line per article.
pub fn format_digest(summaries: &[&PivotSummary]) -> String {
    let mut out = String::new();
    for (n, s) in summaries.iter().enumerate() {
        if n > 0 {
            out.push('\n');
        }
        out.push_str(&format!("{} ({})\n", s.journal_title, s.issn));
        out.push_str(&format!(
            "Volume {}, issue {} ({})\n",
            s.volume,
            s.issue,
            s.cover_date.format("%Y-%m-%d")
        ));
        for a in &s.articles {
            let authors = if a.authors.is_empty() {
                "(no author listed)".to_string()
            } else {
                a.authors.join(", ")
            };
            out.push_str(&format!(
                "  {} — {} — pp. {}-{}\n",
                a.title, authors, a.first_page, a.last_page
            ));
        }
    }
    out
}

/// Sends one consolidated message per subscriber listing every subscribed
/// summary that arrived in `(state.watermark, now]`.
pub fn run_digest(
    now: DateTime<Utc>,
    state: &mut DigestState,
    summaries: &[PivotSummary],
    subscriptions: &[AlertSubscription],
    sink: &dyn MailSink,
) -> Result<DigestRun, DigestError> {
    if now < state.watermark {
        return Err(DigestError::ClockBehindWatermark {
            now,
            watermark: state.watermark,
        });
    }
    let window_start = state.watermark;
    let mut arrived: Vec<&PivotSummary> = summaries
        .iter()
        .filter(|s| s.arrival > window_start && s.arrival <= now)
        .collect();
    arrived.sort_by(|a, b| {
        (a.arrival, &a.issn, a.volume, a.issue).cmp(&(b.arrival, &b.issn, b.volume, b.issue))
    });

    let mut per_email: BTreeMap<&str, Vec<&PivotSummary>> = BTreeMap::new();
    for sub in subscriptions.iter().filter(|s| s.active) {
        let entry = per_email.entry(sub.email.as_str()).or_default();
        for s in &arrived {
            let Ok(key) = s.key() else { continue };
            if sub.issns.contains(&key.issn)
                && !entry.iter().any(|e| std::ptr::eq(*e, *s))
                && !state.delivered_pending.contains(&(sub.email.clone(), key))
            {
                entry.push(s);
            }
        }
    }

    let mut messages = Vec::new();
    for (email, list) in per_email.into_iter().filter(|(_, l)| !l.is_empty()) {
        let message = MailMessage {
            recipient: email.to_string(),
            subject: format!("New tables of contents: {} issue(s)", list.len()),
            body: format_digest(&list),
        };
        let keys: Vec<SummaryKey> = list.iter().filter_map(|s| s.key().ok()).collect();
        sink.send(&message)
            .map_err(|e| DigestError::SinkUnavailable(e.to_string()))?;
        for k in &keys {
            state
                .delivered_pending
                .insert((email.to_string(), k.clone()));
        }
        messages.push(DigestMessage {
            email: email.to_string(),
            summaries: keys,
        });
    }

    let run = DigestRun {
        run_id: state.next_run_id,
        window_start,
        window_end: now,
        messages,
        dispatched: Utc::now(),
    };
    state.watermark = now;
    state.next_run_id += 1;
    state.delivered_pending.clear();
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ArticleRef;
    use crate::mail::MemorySink;
    use chrono::{Duration, NaiveDate, TimeZone};

    fn t(h: i64) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2001, 10, 1, 0, 0, 0).unwrap() + Duration::hours(h)
    }

    fn summary(issn: &str, volume: u32, arrival: DateTime<Utc>) -> PivotSummary {
        PivotSummary {
            issn: issn.into(),
            journal_title: format!("Journal {issn}"),
            volume,
            issue: 1,
            cover_date: NaiveDate::from_ymd_opt(2001, 9, 1).unwrap(),
            provider: "p".into(),
            arrival,
            articles: vec![ArticleRef {
                seq: 1,
                title: "Title".into(),
                authors: vec!["Author".into()],
                first_page: 1,
                last_page: 5,
                abstract_text: None,
            }],
        }
    }

    fn sub(email: &str, issns: &[&str]) -> AlertSubscription {
        AlertSubscription {
            id: 1,
            email: email.into(),
            issns: issns.iter().map(|i| i.parse().unwrap()).collect(),
            created: t(0),
            active: true,
        }
    }

    #[test]
    fn one_new_summary_one_message() {
        let sink = MemorySink::default();
        let mut state = DigestState::bootstrap(t(0));
        let run = run_digest(
            t(24),
            &mut state,
            &[summary("0000-0019", 1, t(3))],
            &[sub("a@x", &["0000-0019"])],
            &sink,
        )
        .unwrap();
        assert_eq!(run.messages.len(), 1);
        assert_eq!(run.messages[0].summaries.len(), 1);
        assert_eq!(state.watermark, t(24));
    }

    #[test]
    fn second_run_without_arrivals_is_silent() {
        let sink = MemorySink::default();
        let mut state = DigestState::bootstrap(t(0));
        let summaries = [summary("0000-0019", 1, t(3))];
        let subs = [sub("a@x", &["0000-0019"])];
        run_digest(t(24), &mut state, &summaries, &subs, &sink).unwrap();
        let second = run_digest(t(48), &mut state, &summaries, &subs, &sink).unwrap();
        assert!(second.messages.is_empty());
        assert_eq!(second.window_start, t(24));
        assert_eq!(sink.messages().len(), 1);
    }

    #[test]
    fn failed_sink_keeps_watermark() {
        let sink = MemorySink::default();
        sink.set_failing(true);
        let mut state = DigestState::bootstrap(t(0));
        let summaries = [summary("0000-0019", 1, t(3))];
        let subs = [sub("a@x", &["0000-0019"])];
        assert!(matches!(
            run_digest(t(24), &mut state, &summaries, &subs, &sink),
            Err(DigestError::SinkUnavailable(_))
        ));
        assert_eq!(state.watermark, t(0));
        sink.set_failing(false);
        let run = run_digest(t(30), &mut state, &summaries, &subs, &sink).unwrap();
        assert_eq!(run.window_start, t(0));
        assert_eq!(run.messages.len(), 1);
    }

    #[test]
    fn inactive_and_unsubscribed_are_ignored() {
        let sink = MemorySink::default();
        let mut state = DigestState::bootstrap(t(0));
        let mut inactive = sub("b@x", &["0000-0019"]);
        inactive.active = false;
        let run = run_digest(
            t(24),
            &mut state,
            &[summary("0000-0019", 1, t(3))],
            &[inactive, sub("c@x", &["0000-0027"])],
            &sink,
        )
        .unwrap();
        assert!(run.messages.is_empty());
    }

    #[test]
    fn clock_behind_watermark() {
        let mut state = DigestState::bootstrap(t(10));
        assert!(run_digest(t(5), &mut state, &[], &[], &MemorySink::default()).is_err());
    }
}
