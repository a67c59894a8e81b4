//! Provider feed adapters. Each provider delivers its own layout; an adapter
//! maps one raw feed file onto pivot summaries, all-or-nothing.
//!
//! `swetslike` is tab-delimited, one article per line:
//!
//! ```text
//! # comment
//! ISSN<TAB>JOURNAL<TAB>VOLUME<TAB>ISSUE<TAB>DATE<TAB>SEQ<TAB>TITLE<TAB>AUTHORS<TAB>FIRST<TAB>LAST<TAB>ABSTRACT
//! ```
//!
//! AUTHORS is `;`-separated (may be empty), ABSTRACT may be empty. Consecutive
//! lines sharing (ISSN, VOLUME, ISSUE) form one summary.
//!
//! `editoralert` is line-tagged, two-letter tag, one space, value:
//!
//! ```text
//! IS                      start of an issue
//! SN 0000-0019            ISSN
//! JT Journal title
//! VO 12
//! NO 3
//! DA 2001-10-14
//! AR                      start of an article (seq = position)
//! TI Article title
//! AU Author               repeatable
//! PG 1-10
//! AB Abstract             optional
//! ER                      end of the issue
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, Utc};

use crate::model::ProviderId;

use super::pivot::{ArticleRef, PivotSummary};
use super::IngestError;

pub trait FeedAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn parse(
        &self,
        text: &str,
        provider: &ProviderId,
        received: DateTime<Utc>,
    ) -> Result<Vec<PivotSummary>, IngestError>;
}

#[derive(Clone)]
pub struct AdapterRegistry {
    adapters: BTreeMap<String, Arc<dyn FeedAdapter>>,
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        let mut r = AdapterRegistry {
            adapters: BTreeMap::new(),
        };
        r.register(Arc::new(SwetsLike));
        r.register(Arc::new(EditorAlert));
        r
    }
}

impl AdapterRegistry {
    pub fn register(&mut self, adapter: Arc<dyn FeedAdapter>) {
        self.adapters.insert(adapter.name().to_string(), adapter);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn FeedAdapter>> {
        self.adapters.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.adapters.contains_key(name)
    }
}

fn malformed(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::MalformedFeed {
        line,
        message: message.into(),
    }
}

fn positive(raw: &str, line: usize, what: &str) -> Result<u32, IngestError> {
    raw.trim()
        .parse::<u32>()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| malformed(line, format!("{what} `{raw}` is not a positive integer")))
}

fn date(raw: &str, line: usize) -> Result<NaiveDate, IngestError> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d")
        .map_err(|_| malformed(line, format!("date `{raw}` is not YYYY-MM-DD")))
}

fn finish(
    summaries: Vec<PivotSummary>,
    last_line: usize,
) -> Result<Vec<PivotSummary>, IngestError> {
    if summaries.is_empty() {
        return Err(malformed(last_line, "feed contains no records"));
    }
    for s in &summaries {
        s.check_structure()
            .map_err(|e| malformed(last_line, e.to_string()))?;
    }
    Ok(summaries)
}

pub struct SwetsLike;

impl FeedAdapter for SwetsLike {
    fn name(&self) -> &str {
        "swetslike"
    }

    fn parse(
        &self,
        text: &str,
        provider: &ProviderId,
        received: DateTime<Utc>,
    ) -> Result<Vec<PivotSummary>, IngestError> {
        let mut out: Vec<PivotSummary> = Vec::new();
        let mut last = 0;
        for (n, line) in text.lines().enumerate() {
            let lineno = n + 1;
            last = lineno;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 11 {
                return Err(malformed(
                    lineno,
                    format!("expected 11 tab-separated fields, found {}", cols.len()),
                ));
            }
            let issn = cols[0].trim().to_string();
            let volume = positive(cols[2], lineno, "volume")?;
            let issue = positive(cols[3], lineno, "issue")?;
            let cover_date = date(cols[4], lineno)?;
            let authors = cols[7]
                .split(';')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(String::from)
                .collect();
            let article = ArticleRef {
                seq: positive(cols[5], lineno, "seq")?,
                title: cols[6].trim().to_string(),
                authors,
                first_page: positive(cols[8], lineno, "first page")?,
                last_page: positive(cols[9], lineno, "last page")?,
                abstract_text: Some(cols[10].trim())
                    .filter(|a| !a.is_empty())
                    .map(String::from),
            };
            if article.title.is_empty() {
                return Err(malformed(lineno, "empty article title"));
            }
            match out.last_mut() {
                Some(s) if s.issn == issn && s.volume == volume && s.issue == issue => {
                    s.articles.push(article);
                }
                _ => out.push(PivotSummary {
                    issn,
                    journal_title: cols[1].trim().to_string(),
                    volume,
                    issue,
                    cover_date,
                    provider: provider.clone(),
                    arrival: received,
                    articles: vec![article],
                }),
            }
        }
        finish(out, last)
    }
}

pub struct EditorAlert;

#[derive(Default)]
struct IssueDraft {
    issn: Option<String>,
    journal: Option<String>,
    volume: Option<u32>,
    issue: Option<u32>,
    date: Option<NaiveDate>,
    articles: Vec<ArticleDraft>,
}

#[derive(Default)]
struct ArticleDraft {
    title: Option<String>,
    authors: Vec<String>,
    pages: Option<(u32, u32)>,
    abstract_text: Option<String>,
}

impl FeedAdapter for EditorAlert {
    fn name(&self) -> &str {
        "editoralert"
    }

    fn parse(
        &self,
        text: &str,
        provider: &ProviderId,
        received: DateTime<Utc>,
    ) -> Result<Vec<PivotSummary>, IngestError> {
        let mut out = Vec::new();
        let mut current: Option<IssueDraft> = None;
        let mut last = 0;
        for (n, raw_line) in text.lines().enumerate() {
            let lineno = n + 1;
            last = lineno;
            let line = raw_line.trim_end();
            if line.is_empty() {
                continue;
            }
            let (tag, value) = match line.split_once(' ') {
                Some((t, v)) => (t, v.trim()),
                None => (line, ""),
            };
            if tag == "IS" {
                if current.is_some() {
                    return Err(malformed(lineno, "IS before ER"));
                }
                current = Some(IssueDraft::default());
                continue;
            }
            let draft = current
                .as_mut()
                .ok_or_else(|| malformed(lineno, format!("`{tag}` outside an issue")))?;
            let set_once = |slot: &mut Option<String>, what: &str| {
                if slot.is_some() {
                    return Err(malformed(lineno, format!("repeated {what}")));
                }
                *slot = Some(value.to_string());
                Ok(())
            };
            match tag {
                "SN" => set_once(&mut draft.issn, "SN")?,
                "JT" => set_once(&mut draft.journal, "JT")?,
                "VO" => draft.volume = Some(positive(value, lineno, "volume")?),
                "NO" => draft.issue = Some(positive(value, lineno, "issue")?),
                "DA" => draft.date = Some(date(value, lineno)?),
                "AR" => draft.articles.push(ArticleDraft::default()),
                "TI" | "AU" | "PG" | "AB" => {
                    let art = draft
                        .articles
                        .last_mut()
                        .ok_or_else(|| malformed(lineno, format!("`{tag}` before AR")))?;
                    match tag {
                        "TI" => set_once(&mut art.title, "TI")?,
                        "AU" => art.authors.push(value.to_string()),
                        "AB" => set_once(&mut art.abstract_text, "AB")?,
                        _ => {
                            let (a, b) = value.split_once('-').ok_or_else(|| {
                                malformed(lineno, format!("pages `{value}` are not a-b"))
                            })?;
                            art.pages = Some((
                                positive(a, lineno, "first page")?,
                                positive(b, lineno, "last page")?,
                            ));
                        }
                    }
                }
                "ER" => {
                    let d = current.take().expect("checked above");
                    let missing = |what: &str| malformed(lineno, format!("issue lacks {what}"));
                    let articles = d
                        .articles
                        .into_iter()
                        .enumerate()
                        .map(|(i, a)| {
                            let (first_page, last_page) = a.pages.ok_or_else(|| missing("PG"))?;
                            Ok(ArticleRef {
                                seq: i as u32 + 1,
                                title: a
                                    .title
                                    .filter(|t| !t.is_empty())
                                    .ok_or_else(|| missing("TI"))?,
                                authors: a.authors,
                                first_page,
                                last_page,
                                abstract_text: a.abstract_text,
                            })
                        })
                        .collect::<Result<Vec<_>, IngestError>>()?;
                    out.push(PivotSummary {
                        issn: d.issn.ok_or_else(|| missing("SN"))?,
                        journal_title: d.journal.ok_or_else(|| missing("JT"))?,
                        volume: d.volume.ok_or_else(|| missing("VO"))?,
                        issue: d.issue.ok_or_else(|| missing("NO"))?,
                        cover_date: d.date.ok_or_else(|| missing("DA"))?,
                        provider: provider.clone(),
                        arrival: received,
                        articles,
                    });
                }
                other => return Err(malformed(lineno, format!("unknown tag `{other}`"))),
            }
        }
        if current.is_some() {
            return Err(malformed(last, "feed ends inside an issue"));
        }
        finish(out, last)
    }
}
