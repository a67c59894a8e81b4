//! Canonical pivot representation of a journal-issue summary.
//!
//! ```text
//! <summary issn="NNNN-NNNC" journal="…" volume="V" issue="I" date="YYYY-MM-DD" provider="…" arrival="RFC3339">
//!   <article seq="k">
//!     <title>…</title>
//!     <author>…</author>*
//!     <pages first="a" last="b"/>
//!     <abstract>…</abstract>?
//!   </article>+
//! </summary>
//! ```

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::model::{ArticleKey, Issn, KeyError, ProviderId, SummaryKey};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRef {
    pub seq: u32,
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    pub first_page: u32,
    pub last_page: u32,
    #[serde(default, rename = "abstract")]
    pub abstract_text: Option<String>,
}

impl ArticleRef {
    pub fn page_count(&self) -> u32 {
        self.last_page.saturating_sub(self.first_page) + 1
    }
}

/// One journal issue's table of contents. The ISSN is kept as delivered so
/// that validation can report a bad check character instead of the parser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotSummary {
    pub issn: String,
    pub journal_title: String,
    pub volume: u32,
    pub issue: u32,
    pub cover_date: NaiveDate,
    pub provider: ProviderId,
    pub arrival: DateTime<Utc>,
    pub articles: Vec<ArticleRef>,
}

impl PivotSummary {
    pub fn key(&self) -> Result<SummaryKey, KeyError> {
        Ok(SummaryKey {
            issn: Issn::parse(&self.issn)?,
            volume: self.volume,
            issue: self.issue,
        })
    }

    pub fn article_key(&self, seq: u32) -> Result<ArticleKey, KeyError> {
        Ok(self.key()?.article(seq))
    }

    pub fn article(&self, seq: u32) -> Option<&ArticleRef> {
        self.articles.iter().find(|a| a.seq == seq)
    }

    /// Structural checks shared by the pivot parser and the adapters.
    pub fn check_structure(&self) -> Result<(), IngestError> {
        let violation = |element: &str, message: String| IngestError::SchemaViolation {
            element: element.to_string(),
            message,
        };
        if !Issn::is_well_formed(&self.issn) {
            return Err(violation(
                "summary@issn",
                format!("`{}` is not NNNN-NNNC", self.issn),
            ));
        }
        if self.volume == 0 || self.issue == 0 {
            return Err(violation(
                "summary",
                "volume and issue must be positive".into(),
            ));
        }
        if self.articles.is_empty() {
            return Err(violation(
                "article",
                "a summary needs at least one article".into(),
            ));
        }
        let mut previous = 0;
        for a in &self.articles {
            if a.seq <= previous {
                return Err(violation(
                    "article@seq",
                    format!("seq {} out of order", a.seq),
                ));
            }
            previous = a.seq;
            if a.first_page == 0 || a.first_page > a.last_page {
                return Err(violation(
                    "pages",
                    format!(
                        "article {}: bad page range {}-{}",
                        a.seq, a.first_page, a.last_page
                    ),
                ));
            }
        }
        Ok(())
    }
}

fn escape_text(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
}

fn escape_attr(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            c => escape_text(c.encode_utf8(&mut [0; 4]), out),
        }
    }
}

pub fn to_pivot_document(s: &PivotSummary) -> Vec<u8> {
    let mut out = String::with_capacity(256 + s.articles.len() * 256);
    let attr = |out: &mut String, name: &str, value: &str| {
        out.push(' ');
        out.push_str(name);
        out.push_str("=\"");
        escape_attr(value, out);
        out.push('"');
    };
    out.push_str("<summary");
    attr(&mut out, "issn", &s.issn);
    attr(&mut out, "journal", &s.journal_title);
    attr(&mut out, "volume", &s.volume.to_string());
    attr(&mut out, "issue", &s.issue.to_string());
    attr(
        &mut out,
        "date",
        &s.cover_date.format("%Y-%m-%d").to_string(),
    );
    attr(&mut out, "provider", s.provider.as_str());
    attr(
        &mut out,
        "arrival",
        &s.arrival.to_rfc3339_opts(SecondsFormat::AutoSi, true),
    );
    out.push_str(">\n");
    for a in &s.articles {
        out.push_str(&format!("  <article seq=\"{}\">\n    <title>", a.seq));
        escape_text(&a.title, &mut out);
        out.push_str("</title>\n");
        for author in &a.authors {
            out.push_str("    <author>");
            escape_text(author, &mut out);
            out.push_str("</author>\n");
        }
        out.push_str(&format!(
            "    <pages first=\"{}\" last=\"{}\"/>\n",
            a.first_page, a.last_page
        ));
        if let Some(abs) = &a.abstract_text {
            out.push_str("    <abstract>");
            escape_text(abs, &mut out);
            out.push_str("</abstract>\n");
        }
        out.push_str("  </article>\n");
    }
    out.push_str("</summary>\n");
    out.into_bytes()
}

fn violation(element: &str, message: impl Into<String>) -> IngestError {
    IngestError::SchemaViolation {
        element: element.to_string(),
        message: message.into(),
    }
}

struct Attrs(Vec<(String, String)>);

impl Attrs {
    fn read(e: &BytesStart<'_>, element: &str) -> Result<Self, IngestError> {
        let mut out = Vec::new();
        for attr in e.attributes() {
            let attr = attr.map_err(|err| violation(element, err.to_string()))?;
            let key = String::from_utf8(attr.key.as_ref().to_vec())
                .map_err(|_| violation(element, "attribute name is not UTF-8"))?;
            let value = attr
                .unescape_value()
                .map_err(|err| violation(element, err.to_string()))?
                .into_owned();
            out.push((key, value));
        }
        Ok(Attrs(out))
    }

    fn required(&self, element: &str, name: &str) -> Result<&str, IngestError> {
        self.0
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| violation(&format!("{element}@{name}"), "missing attribute"))
    }

    fn optional(&self, name: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn number(&self, element: &str, name: &str) -> Result<u32, IngestError> {
        let raw = self.required(element, name)?;
        raw.parse::<u32>().ok().filter(|n| *n > 0).ok_or_else(|| {
            violation(
                &format!("{element}@{name}"),
                format!("`{raw}` is not a positive integer"),
            )
        })
    }
}

/// Parses a pivot document. `arrival` is required.
pub fn parse_pivot_document(bytes: &[u8]) -> Result<PivotSummary, IngestError> {
    parse_inner(bytes, None)
}

/// Parses a pivot document, stamping `default_arrival` when the document
/// carries no arrival attribute (manually added summaries).
pub fn parse_pivot_document_at(
    bytes: &[u8],
    default_arrival: DateTime<Utc>,
) -> Result<PivotSummary, IngestError> {
    parse_inner(bytes, Some(default_arrival))
}

#[derive(Default)]
struct PartialArticle {
    seq: u32,
    title: Option<String>,
    authors: Vec<String>,
    pages: Option<(u32, u32)>,
    abstract_text: Option<String>,
}

enum TextField {
    Title,
    Author,
    Abstract,
}

fn parse_inner(
    bytes: &[u8],
    default_arrival: Option<DateTime<Utc>>,
) -> Result<PivotSummary, IngestError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| violation("document", format!("not UTF-8: {e}")))?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(false);

    let mut header: Option<PivotSummary> = None;
    let mut closed = false;
    let mut article: Option<PartialArticle> = None;
    let mut field: Option<(TextField, String)> = None;

    loop {
        let event = reader.read_event().map_err(|e| {
            violation(
                "document",
                format!("at byte {}: {e}", reader.buffer_position()),
            )
        })?;
        match event {
            Event::Start(e) | Event::Empty(e) if field.is_some() => {
                return Err(violation(
                    &String::from_utf8_lossy(e.name().as_ref()),
                    "markup inside a text element",
                ));
            }
            Event::Start(e) => {
                let name = e.name();
                match (name.as_ref(), &header, &article) {
                    (b"summary", None, _) => {
                        let a = Attrs::read(&e, "summary")?;
                        let date_raw = a.required("summary", "date")?;
                        let cover_date =
                            NaiveDate::parse_from_str(date_raw, "%Y-%m-%d").map_err(|_| {
                                violation("summary@date", format!("`{date_raw}` is not YYYY-MM-DD"))
                            })?;
                        let arrival = match (a.optional("arrival"), default_arrival) {
                            (Some(raw), _) => DateTime::parse_from_rfc3339(raw)
                                .map_err(|_| {
                                    violation("summary@arrival", format!("`{raw}` is not RFC 3339"))
                                })?
                                .with_timezone(&Utc),
                            (None, Some(d)) => d,
                            (None, None) => {
                                return Err(violation("summary@arrival", "missing attribute"))
                            }
                        };
                        header = Some(PivotSummary {
                            issn: a.required("summary", "issn")?.to_string(),
                            journal_title: a.required("summary", "journal")?.to_string(),
                            volume: a.number("summary", "volume")?,
                            issue: a.number("summary", "issue")?,
                            cover_date,
                            provider: ProviderId::new(a.required("summary", "provider")?),
                            arrival,
                            articles: Vec::new(),
                        });
                    }
                    (b"article", Some(_), None) if !closed => {
                        let a = Attrs::read(&e, "article")?;
                        article = Some(PartialArticle {
                            seq: a.number("article", "seq")?,
                            ..Default::default()
                        });
                    }
                    (b"title", _, Some(_)) => field = Some((TextField::Title, String::new())),
                    (b"author", _, Some(_)) => field = Some((TextField::Author, String::new())),
                    (b"abstract", _, Some(_)) => field = Some((TextField::Abstract, String::new())),
                    (other, _, _) => {
                        return Err(violation(
                            &String::from_utf8_lossy(other),
                            "unexpected element",
                        ));
                    }
                }
            }
            Event::Empty(e) => match (e.name().as_ref(), article.as_mut()) {
                (b"pages", Some(art)) => {
                    if art.pages.is_some() {
                        return Err(violation("pages", "repeated element"));
                    }
                    let a = Attrs::read(&e, "pages")?;
                    art.pages = Some((a.number("pages", "first")?, a.number("pages", "last")?));
                }
                (b"title", Some(_)) => field_done(&mut article, TextField::Title, String::new())?,
                (b"author", Some(_)) => field_done(&mut article, TextField::Author, String::new())?,
                (b"abstract", Some(_)) => {
                    field_done(&mut article, TextField::Abstract, String::new())?
                }
                (other, _) => {
                    return Err(violation(
                        &String::from_utf8_lossy(other),
                        "unexpected element",
                    ))
                }
            },
            Event::Text(t) => {
                let unescaped = t.unescape().map_err(|e| violation("text", e.to_string()))?;
                match field.as_mut() {
                    Some((_, buf)) => buf.push_str(&unescaped),
                    None if unescaped.trim().is_empty() => {}
                    None => return Err(violation("text", "stray character data")),
                }
            }
            Event::CData(c) => match field.as_mut() {
                Some((_, buf)) => buf.push_str(
                    std::str::from_utf8(&c).map_err(|_| violation("cdata", "not UTF-8"))?,
                ),
                None => return Err(violation("cdata", "stray character data")),
            },
            Event::End(e) => match e.name().as_ref() {
                b"title" | b"author" | b"abstract" => {
                    let (kind, value) = field
                        .take()
                        .ok_or_else(|| violation("document", "unbalanced end tag"))?;
                    field_done(&mut article, kind, value)?;
                }
                b"article" => {
                    let art = article
                        .take()
                        .ok_or_else(|| violation("article", "unbalanced end tag"))?;
                    let title = art
                        .title
                        .ok_or_else(|| violation("title", "missing element"))?;
                    let (first_page, last_page) = art
                        .pages
                        .ok_or_else(|| violation("pages", "missing element"))?;
                    header
                        .as_mut()
                        .expect("article inside summary")
                        .articles
                        .push(ArticleRef {
                            seq: art.seq,
                            title,
                            authors: art.authors,
                            first_page,
                            last_page,
                            abstract_text: art.abstract_text,
                        });
                }
                b"summary" if article.is_none() => closed = true,
                other => {
                    return Err(violation(
                        &String::from_utf8_lossy(other),
                        "unexpected end tag",
                    ))
                }
            },
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
            Event::Eof => break,
        }
    }
    let summary = header.ok_or_else(|| violation("summary", "missing element"))?;
    if !closed {
        return Err(violation("summary", "document ends before </summary>"));
    }
    summary.check_structure()?;
    Ok(summary)
}

fn field_done(
    article: &mut Option<PartialArticle>,
    kind: TextField,
    value: String,
) -> Result<(), IngestError> {
    let art = article
        .as_mut()
        .ok_or_else(|| violation("article", "text element outside an article"))?;
    match kind {
        TextField::Title if art.title.is_some() => {
            return Err(violation("title", "repeated element"))
        }
        TextField::Title => art.title = Some(value),
        TextField::Author => art.authors.push(value),
        TextField::Abstract if art.abstract_text.is_some() => {
            return Err(violation("abstract", "repeated element"))
        }
        TextField::Abstract => art.abstract_text = Some(value),
    }
    Ok(())
}
