//! Filtered summary storage (`store/<issn>/<year>/<volume>-<issue>.pivot`)
//! and the raw input archive (`archive/<provider>/<YYYY-MM-DD>/<seq>`).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use chrono::{DateTime, Datelike, NaiveDate, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::fsutil::{files_with_extension, write_atomic};
use crate::model::{ProviderId, SummaryKey};

use super::pivot::{parse_pivot_document, to_pivot_document, PivotSummary};
use super::{IngestError, ProviderConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    Filtered,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StoreOutcome {
    Stored(PathBuf),
    Skipped(SkipReason),
}

/// The Summary Database on disk.
#[derive(Debug, Clone)]
pub struct SummaryStore {
    root: PathBuf,
}

impl SummaryStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SummaryStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, s: &PivotSummary) -> PathBuf {
        self.root
            .join(s.issn.to_ascii_uppercase())
            .join(s.cover_date.year().to_string())
            .join(format!("{}-{}.pivot", s.volume, s.issue))
    }

    /// Locates a stored summary regardless of its cover year.
    pub fn find(&self, key: &SummaryKey) -> io::Result<Option<PathBuf>> {
        let dir = self.root.join(key.issn.as_str());
        if !dir.exists() {
            return Ok(None);
        }
        let name = format!("{}-{}.pivot", key.volume, key.issue);
        for year in fs::read_dir(&dir)? {
            let candidate = year?.path().join(&name);
            if candidate.is_file() {
                return Ok(Some(candidate));
            }
        }
        Ok(None)
    }

    /// Stores `s` unless the provider's filter rejects it or its key already
    /// exists. Existing files are never overwritten.
    pub fn store(
        &self,
        s: &PivotSummary,
        cfg: &ProviderConfig,
    ) -> Result<StoreOutcome, IngestError> {
        if !cfg.title_filter.admits(&s.issn) {
            return Ok(StoreOutcome::Skipped(SkipReason::Filtered));
        }
        let key = s.key().map_err(|e| IngestError::SchemaViolation {
            element: "summary@issn".into(),
            message: e.to_string(),
        })?;
        if self.find(&key)?.is_some() {
            return Ok(StoreOutcome::Skipped(SkipReason::Duplicate));
        }
        let path = self.path_for(s);
        write_atomic(&path, &to_pivot_document(s))?;
        Ok(StoreOutcome::Stored(path))
    }

    /// Replaces a stored summary (administrative correction). Moves the file
    /// when the cover year changed.
    pub fn replace(&self, s: &PivotSummary) -> Result<PathBuf, IngestError> {
        let key = s.key().map_err(|e| IngestError::SchemaViolation {
            element: "summary@issn".into(),
            message: e.to_string(),
        })?;
        let path = self.path_for(s);
        write_atomic(&path, &to_pivot_document(s))?;
        if let Some(old) = self.find_all(&key)?.into_iter().find(|p| p != &path) {
            fs::remove_file(old)?;
        }
        Ok(path)
    }

    fn find_all(&self, key: &SummaryKey) -> io::Result<Vec<PathBuf>> {
        let dir = self.root.join(key.issn.as_str());
        let name = format!("{}-{}.pivot", key.volume, key.issue);
        let mut out = Vec::new();
        if dir.exists() {
            for year in fs::read_dir(&dir)? {
                let candidate = year?.path().join(&name);
                if candidate.is_file() {
                    out.push(candidate);
                }
            }
        }
        Ok(out)
    }

    pub fn load(&self, path: &Path) -> Result<PivotSummary, IngestError> {
        parse_pivot_document(&fs::read(path)?)
    }

    pub fn load_all(&self) -> Result<Vec<PivotSummary>, IngestError> {
        files_with_extension(&self.root, "pivot")?
            .iter()
            .map(|p| self.load(p))
            .collect()
    }

    /// Cheap change detector: (path, modified, length) of every stored file.
    pub fn signature(&self) -> io::Result<Vec<(PathBuf, Option<SystemTime>, u64)>> {
        files_with_extension(&self.root, "pivot")?
            .into_iter()
            .map(|p| {
                let meta = fs::metadata(&p)?;
                Ok((p, meta.modified().ok(), meta.len()))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchivedFile {
    pub path: PathBuf,
    pub provider: ProviderId,
    pub received: DateTime<Utc>,
}

/// Verbatim copy of every feed file ever received. Nothing is deleted.
#[derive(Debug, Clone)]
pub struct RawArchive {
    root: PathBuf,
}

const RECEIVED_SUFFIX: &str = "received";

impl RawArchive {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RawArchive { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn archive_raw(
        &self,
        raw: &[u8],
        provider: &ProviderId,
        received: DateTime<Utc>,
    ) -> Result<PathBuf, IngestError> {
        let dir = self
            .root
            .join(provider.as_str())
            .join(received.format("%Y-%m-%d").to_string());
        fs::create_dir_all(&dir)?;
        let next = sequence_numbers(&dir)?.into_iter().max().unwrap_or(0) + 1;
        let path = dir.join(next.to_string());
        write_atomic(&path, raw)?;
        write_atomic(
            &dir.join(format!("{next}.{RECEIVED_SUFFIX}")),
            received
                .to_rfc3339_opts(SecondsFormat::AutoSi, true)
                .as_bytes(),
        )?;
        Ok(path)
    }

    /// Archived files of one provider in arrival order.
    pub fn list(&self, provider: &ProviderId) -> Result<Vec<ArchivedFile>, IngestError> {
        let base = self.root.join(provider.as_str());
        let mut out = Vec::new();
        if !base.exists() {
            return Ok(out);
        }
        let mut days: Vec<PathBuf> = fs::read_dir(&base)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        days.sort();
        for day in days {
            let mut seqs = sequence_numbers(&day)?;
            seqs.sort_unstable();
            for seq in seqs {
                let path = day.join(seq.to_string());
                let received = fs::read_to_string(day.join(format!("{seq}.{RECEIVED_SUFFIX}")))
                    .ok()
                    .and_then(|t| DateTime::parse_from_rfc3339(t.trim()).ok())
                    .map(|t| t.with_timezone(&Utc))
                    .or_else(|| {
                        let name = day.file_name()?.to_str()?;
                        let d = NaiveDate::parse_from_str(name, "%Y-%m-%d").ok()?;
                        Some(d.and_hms_opt(0, 0, 0)?.and_utc())
                    })
                    .unwrap_or(DateTime::<Utc>::UNIX_EPOCH);
                out.push(ArchivedFile {
                    path,
                    provider: provider.clone(),
                    received,
                });
            }
        }
        Ok(out)
    }
}

fn sequence_numbers(dir: &Path) -> io::Result<Vec<u64>> {
    Ok(fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.parse::<u64>().ok()))
        .collect())
}

/// Exclusive writer lock over store and archive, held for a batch or an
/// administrative edit. Released on drop.
pub struct IngestLock {
    _file: fs::File,
}

impl IngestLock {
    pub fn acquire(path: &Path) -> io::Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let file = fs::OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(path)?;
        file.lock()?;
        Ok(IngestLock { _file: file })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ArticleRef, TitleFilter};
    use chrono::TimeZone;

    fn summary() -> PivotSummary {
        PivotSummary {
            issn: "0000-0019".into(),
            journal_title: "J".into(),
            volume: 3,
            issue: 2,
            cover_date: NaiveDate::from_ymd_opt(2001, 5, 1).unwrap(),
            provider: "p".into(),
            arrival: Utc.with_ymd_and_hms(2001, 5, 2, 0, 0, 0).unwrap(),
            articles: vec![ArticleRef {
                seq: 1,
                title: "T".into(),
                authors: vec![],
                first_page: 1,
                last_page: 1,
                abstract_text: None,
            }],
        }
    }

    fn cfg(filter: TitleFilter) -> ProviderConfig {
        ProviderConfig {
            id: "p".into(),
            adapter: "swetslike".into(),
            title_filter: filter,
        }
    }

    #[test]
    fn store_then_duplicate() {
        let dir = tempfile::tempdir().unwrap();
        let store = SummaryStore::new(dir.path().join("store"));
        let s = summary();
        match store.store(&s, &cfg(TitleFilter::AcceptAll)).unwrap() {
            StoreOutcome::Stored(p) => assert!(p.ends_with("store/0000-0019/2001/3-2.pivot")),
            other => panic!("{other:?}"),
        }
        let mut other_year = s.clone();
        other_year.cover_date = NaiveDate::from_ymd_opt(2002, 1, 1).unwrap();
        other_year.journal_title = "changed".into();
        assert_eq!(
            store
                .store(&other_year, &cfg(TitleFilter::AcceptAll))
                .unwrap(),
            StoreOutcome::Skipped(SkipReason::Duplicate)
        );
        assert_eq!(store.load_all().unwrap(), vec![s]);
    }

    #[test]
    fn filtered() {
        let dir = tempfile::tempdir().unwrap();
        let store = SummaryStore::new(dir.path());
        let only = TitleFilter::Only(["0000-0027".parse().unwrap()].into());
        assert_eq!(
            store.store(&summary(), &cfg(only)).unwrap(),
            StoreOutcome::Skipped(SkipReason::Filtered)
        );
        assert!(store.load_all().unwrap().is_empty());
    }

    #[test]
    fn replace_moves_across_years() {
        let dir = tempfile::tempdir().unwrap();
        let store = SummaryStore::new(dir.path());
        let s = summary();
        store.store(&s, &cfg(TitleFilter::AcceptAll)).unwrap();
        let mut fixed = s.clone();
        fixed.cover_date = NaiveDate::from_ymd_opt(2000, 12, 1).unwrap();
        store.replace(&fixed).unwrap();
        assert_eq!(store.load_all().unwrap(), vec![fixed]);
    }

    #[test]
    fn archive_sequences_and_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let archive = RawArchive::new(dir.path());
        let t = Utc.with_ymd_and_hms(2001, 10, 15, 9, 30, 0).unwrap();
        let a = archive
            .archive_raw(b"first\xff", &"swets".into(), t)
            .unwrap();
        let b = archive.archive_raw(b"second", &"swets".into(), t).unwrap();
        assert!(a.ends_with("swets/2001-10-15/1"));
        assert!(b.ends_with("swets/2001-10-15/2"));
        assert_eq!(fs::read(&a).unwrap(), b"first\xff");
        let listed = archive.list(&"swets".into()).unwrap();
        assert_eq!(listed.len(), 2);
        assert_eq!(listed[0].received, t);
        assert!(archive.list(&"other".into()).unwrap().is_empty());
    }
}
