//! Summary ingestion: provider adapters, the pivot format, validation,
//! filtered storage, the raw archive and the service-module pipeline.

pub mod adapters;
mod pipeline;
pub mod pivot;
mod store;
mod validate;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Issn, ProviderId};

pub use adapters::{AdapterRegistry, FeedAdapter};
pub use pipeline::{
    AlertNotify, BatchItem, BatchReport, FileOutcome, Pipeline, PipelineEnv, ServiceModule,
    ServiceRegistry, Stage, StageCounts, StoreModule, TraceEvent, ValidateModule,
};
pub use pivot::{
    parse_pivot_document, parse_pivot_document_at, to_pivot_document, ArticleRef, PivotSummary,
};
pub use store::{ArchivedFile, IngestLock, RawArchive, SkipReason, StoreOutcome, SummaryStore};
pub use validate::{validate, Finding, Severity, ValidationReport};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no adapter named `{0}` is registered")]
    AdapterUnknown(String),
    #[error("malformed feed at line {line}: {message}")]
    MalformedFeed { line: usize, message: String },
    #[error("schema violation in <{element}>: {message}")]
    SchemaViolation { element: String, message: String },
    #[error("storage unavailable: {0}")]
    StorageUnavailable(#[from] std::io::Error),
    #[error("a service module named `{0}` is already registered")]
    DuplicateModuleName(String),
    #[error("exactly one storage module must be registered, found {0}")]
    StorageModuleCount(usize),
    #[error("unknown provider `{0}`")]
    UnknownProvider(String),
}

/// Which ISSNs a provider's feed may add to the store.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TitleFilter {
    #[default]
    AcceptAll,
    Only(BTreeSet<Issn>),
}

impl TitleFilter {
    pub fn admits(&self, issn: &str) -> bool {
        match self {
            TitleFilter::AcceptAll => true,
            TitleFilter::Only(set) => set.iter().any(|i| i.as_str().eq_ignore_ascii_case(issn)),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TitleFilterRepr {
    Keyword(String),
    List(BTreeSet<Issn>),
}

impl Serialize for TitleFilter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TitleFilter::AcceptAll => TitleFilterRepr::Keyword("accept-all".into()),
            TitleFilter::Only(set) => TitleFilterRepr::List(set.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TitleFilter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match TitleFilterRepr::deserialize(d)? {
            TitleFilterRepr::Keyword(k) if k == "accept-all" => Ok(TitleFilter::AcceptAll),
            TitleFilterRepr::Keyword(k) => Err(serde::de::Error::custom(format!(
                "title_filter must be \"accept-all\" or a list of ISSNs, got `{k}`"
            ))),
            TitleFilterRepr::List(set) => Ok(TitleFilter::Only(set)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub id: ProviderId,
    pub adapter: String,
    #[serde(default)]
    pub title_filter: TitleFilter,
}

/// Decodes a raw feed (UTF-8) and maps it onto pivot summaries with the
/// provider's adapter. Any malformed record rejects the whole file.
pub fn parse_feed(
    raw: &[u8],
    provider: &ProviderConfig,
    adapters: &AdapterRegistry,
    received: DateTime<Utc>,
) -> Result<Vec<PivotSummary>, IngestError> {
    let adapter = adapters
        .get(&provider.adapter)
        .ok_or_else(|| IngestError::AdapterUnknown(provider.adapter.clone()))?;
    let text = std::str::from_utf8(raw).map_err(|e| {
        let line = raw[..e.valid_up_to()]
            .iter()
            .filter(|b| **b == b'\n')
            .count()
            + 1;
        IngestError::MalformedFeed {
            line,
            message: format!("invalid UTF-8 at byte offset {}", e.valid_up_to()),
        }
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    adapter.parse(text, &provider.id, received)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_adapter() {
        let cfg = ProviderConfig {
            id: "p".into(),
            adapter: "nope".into(),
            title_filter: TitleFilter::AcceptAll,
        };
        assert!(matches!(
            parse_feed(b"x", &cfg, &AdapterRegistry::default(), Utc::now()),
            Err(IngestError::AdapterUnknown(_))
        ));
    }

    #[test]
    fn invalid_utf8_reports_line() {
        let cfg = ProviderConfig {
            id: "p".into(),
            adapter: "swetslike".into(),
            title_filter: TitleFilter::AcceptAll,
        };
        let raw = b"# header\n0000-0019\t\xff\n";
        match parse_feed(raw, &cfg, &AdapterRegistry::default(), Utc::now()) {
            Err(IngestError::MalformedFeed { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn title_filter_toml_forms() {
        #[derive(Deserialize)]
        struct W {
            f: TitleFilter,
        }
        let all: W = toml::from_str("f = \"accept-all\"").unwrap();
        assert_eq!(all.f, TitleFilter::AcceptAll);
        let some: W = toml::from_str("f = [\"0000-0019\"]").unwrap();
        assert!(some.f.admits("0000-0019"));
        assert!(!some.f.admits("0000-0027"));
        assert!(toml::from_str::<W>("f = \"everything\"").is_err());
    }
}
