//! The consortium-wide summary server: browse, search, article requests,
//! alert subscriptions, administration and statistics.
//!
//! State lives under the summary directory of the data dir:
//! `server.lock`, `events.jsonl`, `alerts.json`, `requests.json`,
//! `digest.json`, `admin.jsonl` and the `mail/` spool. Summaries are read
//! from the shared store and reloaded whenever the store changes.

pub mod http;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::SystemTime;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Settings;
use crate::digest::{run_digest, AlertSubscription, DigestError, DigestRun, DigestStateFile};
use crate::docserver::{
    ArticleMeta, DocError, DocServerDirectory, JobState, MailRequest, PrintRequest,
};
use crate::fsutil::{append_line, write_atomic};
use crate::ingest::{
    validate, IngestError, IngestLock, PivotSummary, ProviderConfig, Severity, StoreOutcome,
    SummaryStore, TitleFilter,
};
use crate::mail::{LogSink, MailSink, SinkKind, SpoolSink};
use crate::model::{split_key, ArticleKey, Domain, InstitutionId, Issn, Journal, SummaryKey};
use crate::policy::{
    plan_delivery, rights_for, DeliveryMode, DeliveryPlan, Destination, Institution, PolicyError,
    ServiceRights, UserContext,
};
use crate::search::{SearchHit, SearchIndex};
use crate::stats::{export_stats, AccessEvent, EventKind, EventLog, StatsError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SummaryError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("rights denied: {0}")]
    RightsDenied(String),
    #[error("no delivery possible: {0}")]
    Unavailable(String),
    #[error("unknown ISSN: {0}")]
    UnknownIssn(String),
    #[error("administrator token required")]
    AuthRequired,
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("summary already stored: {0}")]
    Duplicate(String),
    #[error("another summary server holds {0}")]
    AlreadyRunning(String),
    #[error("mail sink unavailable: {0}")]
    SinkUnavailable(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("document server: {0}")]
    Document(DocError),
    #[error("storage error: {0}")]
    Storage(String),
}

impl SummaryError {
    pub fn code(&self) -> &'static str {
        match self {
            SummaryError::NotFound(_) => "NotFound",
            SummaryError::RightsDenied(_) => "RightsDenied",
            SummaryError::Unavailable(_) => "Unavailable",
            SummaryError::UnknownIssn(_) => "UnknownIssn",
            SummaryError::AuthRequired => "AuthRequired",
            SummaryError::SchemaViolation(_) => "SchemaViolation",
            SummaryError::InvalidRange(_) => "InvalidRange",
            SummaryError::Duplicate(_) => "Duplicate",
            SummaryError::AlreadyRunning(_) => "AlreadyRunning",
            SummaryError::SinkUnavailable(_) => "SinkUnavailable",
            SummaryError::BadRequest(_) => "BadRequest",
            SummaryError::Document(e) => e.code(),
            SummaryError::Storage(_) => "Storage",
        }
    }
}

impl From<std::io::Error> for SummaryError {
    fn from(e: std::io::Error) -> Self {
        SummaryError::Storage(e.to_string())
    }
}

impl From<IngestError> for SummaryError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::SchemaViolation { .. } | IngestError::MalformedFeed { .. } => {
                SummaryError::SchemaViolation(e.to_string())
            }
            other => SummaryError::Storage(other.to_string()),
        }
    }
}

impl From<StatsError> for SummaryError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::InvalidRange { .. } => SummaryError::InvalidRange(e.to_string()),
            StatsError::Io(e) => SummaryError::Storage(e.to_string()),
        }
    }
}

/// Who is asking: the client address and the self-declared category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requester {
    pub ip: IpAddr,
    #[serde(default)]
    pub category: Option<String>,
    #[serde(default)]
    pub email: Option<String>,
}

impl Requester {
    pub fn new(ip: IpAddr, category: &str) -> Self {
        Requester {
            ip,
            category: Some(category.to_string()),
            email: None,
        }
    }
}

/// Availability shown next to an article.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IconState {
    ElectronicLocal,
    CachedFast,
    PaperShared,
    MailOnly,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub issn: Issn,
    pub code: Option<String>,
    pub title: String,
    pub domains: Vec<Domain>,
}

impl From<&Journal> for JournalEntry {
    fn from(j: &Journal) -> Self {
        JournalEntry {
            issn: j.issn.clone(),
            code: j.code.clone(),
            title: j.title.clone(),
            domains: j.domains.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainGroup {
    pub domain: Domain,
    pub journals: Vec<JournalEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleView {
    pub key: ArticleKey,
    pub title: String,
    pub authors: Vec<String>,
    pub first_page: u32,
    pub last_page: u32,
    pub icon: IconState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueView {
    pub key: SummaryKey,
    pub cover_date: NaiveDate,
    pub articles: Vec<ArticleView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueListing {
    pub journal: JournalEntry,
    pub plan: DeliveryPlan,
    pub issues: Vec<IssueView>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestStatus {
    Ready,
    Deferred,
    Failed,
}

/// A job placed on a document server on behalf of a request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRef {
    pub institution: InstitutionId,
    pub id: String,
}

/// The persisted answer to an article request, polled until ready.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub id: u64,
    pub article: ArticleKey,
    pub plan: DeliveryPlan,
    pub status: RequestStatus,
    pub message: String,
    pub locator: Option<String>,
    pub job: Option<JobRef>,
    pub created: DateTime<Utc>,
    pub updated: DateTime<Utc>,
}

/// Field edits for a summary (journal fields) or one article.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryPatch {
    pub journal_title: Option<String>,
    pub cover_date: Option<NaiveDate>,
    pub title: Option<String>,
    pub authors: Option<Vec<String>>,
    pub first_page: Option<u32>,
    pub last_page: Option<u32>,
    #[serde(rename = "abstract")]
    pub abstract_text: Option<String>,
}

impl SummaryPatch {
    fn touches_article(&self) -> bool {
        self.title.is_some()
            || self.authors.is_some()
            || self.first_page.is_some()
            || self.last_page.is_some()
            || self.abstract_text.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminEdit {
    pub timestamp: DateTime<Utc>,
    pub admin: String,
    pub action: String,
    pub key: String,
    pub detail: serde_json::Value,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct AlertBook {
    next: u64,
    subscriptions: BTreeMap<u64, AlertSubscription>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RequestBook {
    next: u64,
    requests: BTreeMap<u64, RequestRecord>,
    /// Articles known to be stored at an institution's document server.
    cached: BTreeSet<(InstitutionId, ArticleKey)>,
}

type Signature = Vec<(PathBuf, Option<SystemTime>, u64)>;

#[derive(Default)]
struct Db {
    signature: Signature,
    summaries: BTreeMap<SummaryKey, PivotSummary>,
    index: SearchIndex,
}

/// Resolves `JOURNAL:vV:iI[:aK]`, where JOURNAL is an ISSN or a journal code.
pub fn resolve_key(
    settings: &Settings,
    text: &str,
) -> Result<(SummaryKey, Option<u32>), SummaryError> {
    let (journal, volume, issue, seq) =
        split_key(text).map_err(|e| SummaryError::BadRequest(e.to_string()))?;
    let j = settings
        .consortium
        .journal_by_ref(journal)
        .ok_or_else(|| SummaryError::NotFound(format!("journal `{journal}`")))?;
    Ok((
        SummaryKey {
            issn: j.issn.clone(),
            volume,
            issue,
        },
        seq,
    ))
}

pub fn resolve_article_key(settings: &Settings, text: &str) -> Result<ArticleKey, SummaryError> {
    match resolve_key(settings, text)? {
        (k, Some(seq)) => Ok(k.article(seq)),
        (_, None) => Err(SummaryError::BadRequest(format!(
            "`{text}` names an issue, not an article"
        ))),
    }
}

pub struct SummaryServer {
    settings: Arc<Settings>,
    dir: PathBuf,
    _lock: File,
    store: SummaryStore,
    db: RwLock<Arc<Db>>,
    events: EventLog,
    alerts: Mutex<AlertBook>,
    requests: Mutex<RequestBook>,
    digest: tokio::sync::Mutex<DigestStateFile>,
    docservers: DocServerDirectory,
    sink: Arc<dyn MailSink>,
}

fn read_json<T: Default + serde::de::DeserializeOwned>(path: &Path) -> Result<T, SummaryError> {
    if !path.exists() {
        return Ok(T::default());
    }
    serde_json::from_slice(&std::fs::read(path)?)
        .map_err(|e| SummaryError::Storage(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SummaryError> {
    write_atomic(
        path,
        &serde_json::to_vec_pretty(value).expect("state serializes"),
    )?;
    Ok(())
}

impl SummaryServer {
    /// Opens the server state and takes the deployment-wide lock; fails
    /// with `AlreadyRunning` while another instance holds it.
    pub fn open(
        settings: Arc<Settings>,
        docservers: DocServerDirectory,
    ) -> Result<Self, SummaryError> {
        let dir = settings.summary_dir();
        std::fs::create_dir_all(&dir)?;
        let lock_path = dir.join("server.lock");
        let lock = std::fs::OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)?;
        if lock.try_lock().is_err() {
            return Err(SummaryError::AlreadyRunning(
                lock_path.display().to_string(),
            ));
        }
        let sink: Arc<dyn MailSink> = match settings.config.mail.sink {
            SinkKind::Spool => Arc::new(SpoolSink::new(dir.join("mail"))),
            SinkKind::Log => Arc::new(LogSink),
        };
        let server = SummaryServer {
            store: SummaryStore::new(settings.store_dir()),
            events: EventLog::open(dir.join("events.jsonl"))?,
            alerts: Mutex::new(read_json(&dir.join("alerts.json"))?),
            requests: Mutex::new(read_json(&dir.join("requests.json"))?),
            digest: tokio::sync::Mutex::new(DigestStateFile::new(dir.join("digest.json"))),
            db: RwLock::new(Arc::new(Db::default())),
            _lock: lock,
            settings,
            dir,
            docservers,
            sink,
        };
        server.db()?;
        Ok(server)
    }

    pub fn with_sink(mut self, sink: Arc<dyn MailSink>) -> Self {
        self.sink = sink;
        self
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn events(&self) -> &EventLog {
        &self.events
    }

    /// Current summary database, reloaded when the store changed on disk.
    fn db(&self) -> Result<Arc<Db>, SummaryError> {
        let signature = self.store.signature()?;
        {
            let db = self.db.read().expect("db poisoned");
            if db.signature == signature && !signature.is_empty() {
                return Ok(db.clone());
            }
        }
        let summaries: BTreeMap<SummaryKey, PivotSummary> = self
            .store
            .load_all()?
            .into_iter()
            .filter_map(|s| s.key().ok().map(|k| (k, s)))
            .collect();
        let index = SearchIndex::build(summaries.values());
        let db = Arc::new(Db {
            signature,
            summaries,
            index,
        });
        *self.db.write().expect("db poisoned") = db.clone();
        Ok(db)
    }

    pub fn summaries(&self) -> Result<Vec<PivotSummary>, SummaryError> {
        Ok(self.db()?.summaries.values().cloned().collect())
    }

    pub fn summary(&self, key: &SummaryKey) -> Result<PivotSummary, SummaryError> {
        self.db()?
            .summaries
            .get(key)
            .cloned()
            .ok_or_else(|| SummaryError::NotFound(key.to_string()))
    }

    fn context(&self, who: &Requester) -> (Option<&Institution>, ServiceRights) {
        let inst = self.settings.resolve_ip(who.ip);
        let rights = match (inst, &who.category) {
            (Some(i), Some(category)) => {
                let user = UserContext {
                    source_ip: who.ip,
                    category: category.clone(),
                    email: who.email.clone(),
                };
                rights_for(&user, i).unwrap_or_else(|_| ServiceRights::navigation_only())
            }
            _ => ServiceRights::navigation_only(),
        };
        (inst, rights)
    }

    fn record(
        &self,
        inst: Option<&Institution>,
        issn: Option<&Issn>,
        kind: EventKind,
    ) -> Result<(), SummaryError> {
        self.events.append(AccessEvent {
            timestamp: Utc::now(),
            institution: inst.map(|i| i.id.clone()),
            issn: issn.cloned(),
            kind,
        })?;
        Ok(())
    }

    pub fn list_journals(&self, domain: Option<Domain>) -> Vec<DomainGroup> {
        [Domain::ExactSciences, Domain::HumanSciences]
            .into_iter()
            .filter(|d| domain.map_or(true, |f| f == *d))
            .filter_map(|d| {
                let mut journals: Vec<JournalEntry> = self
                    .settings
                    .consortium
                    .journals
                    .iter()
                    .filter(|j| j.domains.contains(&d))
                    .map(JournalEntry::from)
                    .collect();
                journals.sort_by(|a, b| a.title.cmp(&b.title).then_with(|| a.issn.cmp(&b.issn)));
                (!journals.is_empty()).then_some(DomainGroup {
                    domain: d,
                    journals,
                })
            })
            .collect()
    }

    fn icon(
        &self,
        plan: &DeliveryPlan,
        article: &ArticleKey,
        cached: &BTreeSet<(InstitutionId, ArticleKey)>,
    ) -> IconState {
        let is_cached = |p: &DeliveryPlan| {
            p.source_institution
                .as_ref()
                .is_some_and(|s| cached.contains(&(s.clone(), article.clone())))
        };
        match plan.mode {
            DeliveryMode::ElectronicToWorkstation if is_cached(plan) => IconState::CachedFast,
            DeliveryMode::ElectronicToWorkstation => IconState::ElectronicLocal,
            DeliveryMode::PrintAtAuthorizedPrinter | DeliveryMode::DigitalizeThenPrint
                if is_cached(plan) =>
            {
                IconState::CachedFast
            }
            DeliveryMode::PrintAtAuthorizedPrinter | DeliveryMode::DigitalizeThenPrint => {
                IconState::PaperShared
            }
            DeliveryMode::PhotocopyPostalMail => IconState::MailOnly,
            DeliveryMode::Unavailable => IconState::Unavailable,
        }
    }

    /// Issues of a journal, newest first, with an icon per article.
    pub fn list_issues(
        &self,
        journal: &str,
        who: &Requester,
    ) -> Result<IssueListing, SummaryError> {
        let j = self
            .settings
            .consortium
            .journal_by_ref(journal)
            .ok_or_else(|| SummaryError::NotFound(format!("journal `{journal}`")))?;
        let (inst, rights) = self.context(who);
        if !rights.navigation_browsing {
            return Err(SummaryError::RightsDenied("navigation".into()));
        }
        let plan = match plan_delivery(inst, &rights, &j.issn, &self.settings.consortium) {
            Ok(p) => p,
            Err(_) => DeliveryPlan::unavailable(inst.map(|i| i.id.clone())),
        };
        let db = self.db()?;
        let cached = self
            .requests
            .lock()
            .expect("request book poisoned")
            .cached
            .clone();
        let mut issues: Vec<IssueView> = db
            .summaries
            .range(
                SummaryKey {
                    issn: j.issn.clone(),
                    volume: 0,
                    issue: 0,
                }..,
            )
            .take_while(|(k, _)| k.issn == j.issn)
            .map(|(k, s)| IssueView {
                key: k.clone(),
                cover_date: s.cover_date,
                articles: s
                    .articles
                    .iter()
                    .map(|a| {
                        let key = k.article(a.seq);
                        ArticleView {
                            icon: self.icon(&plan, &key, &cached),
                            key,
                            title: a.title.clone(),
                            authors: a.authors.clone(),
                            first_page: a.first_page,
                            last_page: a.last_page,
                        }
                    })
                    .collect(),
            })
            .collect();
        issues.reverse();
        self.record(inst, Some(&j.issn), EventKind::Browse)?;
        Ok(IssueListing {
            journal: j.into(),
            plan,
            issues,
        })
    }

    pub fn search(&self, query: &str, who: &Requester) -> Result<Vec<SearchHit>, SummaryError> {
        let (inst, rights) = self.context(who);
        if !rights.navigation_browsing {
            return Err(SummaryError::RightsDenied("navigation".into()));
        }
        let hits = self.db()?.index.search(query);
        self.record(inst, None, EventKind::Search)?;
        Ok(hits)
    }

    fn save_requests(&self, book: &RequestBook) -> Result<(), SummaryError> {
        write_json(&self.dir.join("requests.json"), book)
    }

    /// Plans and starts delivery of one article. Appends exactly one
    /// `RequestPlanned` event per call, whatever the outcome.
    pub async fn request_article(
        &self,
        article_ref: &str,
        who: &Requester,
    ) -> Result<RequestRecord, SummaryError> {
        let (inst, rights) = self.context(who);
        let article = match resolve_article_key(&self.settings, article_ref) {
            Ok(a) => a,
            Err(e) => {
                self.record(
                    inst,
                    None,
                    EventKind::RequestPlanned(DeliveryMode::Unavailable),
                )?;
                return Err(e);
            }
        };
        let found = self
            .db()?
            .summaries
            .get(&article.summary_key())
            .and_then(|s| s.article(article.seq).cloned());
        let Some(entry) = found else {
            self.record(
                inst,
                Some(&article.issn),
                EventKind::RequestPlanned(DeliveryMode::Unavailable),
            )?;
            return Err(SummaryError::NotFound(article.to_string()));
        };
        let plan = match plan_delivery(inst, &rights, &article.issn, &self.settings.consortium) {
            Ok(p) => p,
            Err(e) => {
                self.record(
                    inst,
                    Some(&article.issn),
                    EventKind::RequestPlanned(DeliveryMode::Unavailable),
                )?;
                return Err(match e {
                    PolicyError::RightsDenied => {
                        SummaryError::RightsDenied(format!("no right covers delivery of {article}"))
                    }
                    PolicyError::UnknownCategory(c) => {
                        SummaryError::RightsDenied(format!("unknown category `{c}`"))
                    }
                });
            }
        };
        self.record(
            inst,
            Some(&article.issn),
            EventKind::RequestPlanned(plan.mode),
        )?;
        if plan.mode == DeliveryMode::Unavailable {
            return Err(SummaryError::Unavailable(format!(
                "no institution can deliver {article}"
            )));
        }
        let source = plan
            .source_institution
            .clone()
            .expect("available plans have a source");
        let server = self.docservers.get(&source).ok_or_else(|| {
            SummaryError::Unavailable(format!("{source} runs no document server"))
        })?;
        let editor = self
            .settings
            .consortium
            .journal(&article.issn)
            .map(|j| j.editor.clone())
            .expect("stored summaries reference registered journals");
        let meta = ArticleMeta {
            title: entry.title.clone(),
            first_page: entry.first_page,
            last_page: entry.last_page,
            editor,
        };

        let now = Utc::now();
        let (status, message, locator, job) = match plan.mode {
            DeliveryMode::ElectronicToWorkstation => {
                server
                    .fetch(&article, &meta)
                    .await
                    .map_err(SummaryError::Document)?;
                (
                    RequestStatus::Ready,
                    "available on your workstation".to_string(),
                    Some(server.locator(&article)),
                    None,
                )
            }
            DeliveryMode::PrintAtAuthorizedPrinter | DeliveryMode::DigitalizeThenPrint => {
                let job = server
                    .submit_print(&PrintRequest {
                        plan: plan.clone(),
                        article: article.clone(),
                        meta: meta.clone(),
                    })
                    .await
                    .map_err(SummaryError::Document)?;
                let printer = match &plan.destination {
                    Some(Destination::Printer(p)) => p.clone(),
                    _ => String::new(),
                };
                let (status, message) = match job.state {
                    JobState::Done => (RequestStatus::Ready, format!("printed on {printer}")),
                    JobState::Queued => (
                        RequestStatus::Deferred,
                        format!("{source} will digitalize the article and print it on {printer}; you will be advised when it is available"),
                    ),
                    JobState::Failed => (RequestStatus::Failed, job.note.clone().unwrap_or_default()),
                };
                let job_ref = JobRef {
                    institution: source.clone(),
                    id: job.id,
                };
                (status, message, None, Some(job_ref))
            }
            DeliveryMode::PhotocopyPostalMail => {
                let job = server
                    .submit_mail(&MailRequest {
                        plan: plan.clone(),
                        article: article.clone(),
                        pages: meta.pages(),
                    })
                    .await
                    .map_err(SummaryError::Document)?;
                (
                    RequestStatus::Deferred,
                    format!("{source} will post a photocopy; you will be advised when it is sent"),
                    None,
                    Some(JobRef {
                        institution: source.clone(),
                        id: job.id,
                    }),
                )
            }
            DeliveryMode::Unavailable => unreachable!("handled above"),
        };

        let mut book = self.requests.lock().expect("request book poisoned");
        if status == RequestStatus::Ready {
            book.cached.insert((source, article.clone()));
        }
        book.next += 1;
        let record = RequestRecord {
            id: book.next,
            article,
            plan,
            status,
            message,
            locator,
            job,
            created: now,
            updated: now,
        };
        book.requests.insert(record.id, record.clone());
        self.save_requests(&book)?;
        Ok(record)
    }

    /// Current state of a request; deferred ones are refreshed from their
    /// document server and flip to `Ready` once the job is done.
    pub async fn request_status(&self, id: u64) -> Result<RequestRecord, SummaryError> {
        let record = self
            .requests
            .lock()
            .expect("request book poisoned")
            .requests
            .get(&id)
            .cloned()
            .ok_or_else(|| SummaryError::NotFound(format!("request {id}")))?;
        let (RequestStatus::Deferred, Some(job_ref)) = (record.status, &record.job) else {
            return Ok(record);
        };
        let server = self.docservers.get(&job_ref.institution).ok_or_else(|| {
            SummaryError::Unavailable(format!("{} runs no document server", job_ref.institution))
        })?;
        let job = server
            .job(&job_ref.id)
            .await
            .map_err(SummaryError::Document)?;
        let (status, message) = match job.state {
            JobState::Queued => return Ok(record),
            JobState::Done => (
                RequestStatus::Ready,
                format!("{} completed: the article is available", job.id),
            ),
            JobState::Failed => (RequestStatus::Failed, job.note.unwrap_or_default()),
        };
        let mut book = self.requests.lock().expect("request book poisoned");
        let entry = book.requests.get_mut(&id).expect("present");
        if entry.status != RequestStatus::Deferred {
            return Ok(entry.clone());
        }
        entry.status = status;
        entry.message = message;
        entry.updated = Utc::now();
        let updated = entry.clone();
        if status == RequestStatus::Ready {
            if updated.plan.mode != DeliveryMode::PhotocopyPostalMail {
                book.cached
                    .insert((job_ref.institution.clone(), updated.article.clone()));
            }
            let inst = updated
                .plan
                .requester_institution
                .as_ref()
                .and_then(|i| self.settings.institution(i));
            self.record(inst, Some(&updated.article.issn), EventKind::Downloaded)?;
        }
        self.save_requests(&book)?;
        Ok(updated)
    }

    fn save_alerts(&self, book: &AlertBook) -> Result<(), SummaryError> {
        write_json(&self.dir.join("alerts.json"), book)
    }

    /// Subscribes `email` to new issues of the listed journals. Any
    /// registered journal is accepted, held by the consortium or not.
    pub fn create_alert(
        &self,
        email: &str,
        journals: &[String],
        who: Option<&Requester>,
    ) -> Result<AlertSubscription, SummaryError> {
        if let Some(who) = who {
            if !self.context(who).1.alert_service {
                return Err(SummaryError::RightsDenied("alert service".into()));
            }
        }
        if !email.contains('@') || email.trim() != email {
            return Err(SummaryError::BadRequest(format!(
                "`{email}` is not an e-mail address"
            )));
        }
        if journals.is_empty() {
            return Err(SummaryError::BadRequest("no journal listed".into()));
        }
        let mut issns = Vec::new();
        for j in journals {
            let issn = self
                .settings
                .consortium
                .journal_by_ref(j)
                .map(|j| j.issn.clone())
                .ok_or_else(|| SummaryError::UnknownIssn(j.clone()))?;
            if !issns.contains(&issn) {
                issns.push(issn);
            }
        }
        let mut book = self.alerts.lock().expect("alert book poisoned");
        book.next += 1;
        let sub = AlertSubscription {
            id: book.next,
            email: email.to_string(),
            issns,
            created: Utc::now(),
            active: true,
        };
        book.subscriptions.insert(sub.id, sub.clone());
        self.save_alerts(&book)?;
        Ok(sub)
    }

    pub fn delete_alert(&self, id: u64) -> Result<AlertSubscription, SummaryError> {
        let mut book = self.alerts.lock().expect("alert book poisoned");
        let sub = book
            .subscriptions
            .get_mut(&id)
            .ok_or_else(|| SummaryError::NotFound(format!("alert {id}")))?;
        sub.active = false;
        let sub = sub.clone();
        self.save_alerts(&book)?;
        Ok(sub)
    }

    /// Active subscriptions, optionally for one address.
    pub fn list_alerts(&self, email: Option<&str>) -> Vec<AlertSubscription> {
        self.alerts
            .lock()
            .expect("alert book poisoned")
            .subscriptions
            .values()
            .filter(|s| s.active && email.map_or(true, |e| e == s.email))
            .cloned()
            .collect()
    }

    pub fn check_admin(&self, token: Option<&str>) -> Result<(), SummaryError> {
        let expected = &self.settings.config.server.admin_token;
        match token {
            Some(t) if !expected.is_empty() && t == expected => Ok(()),
            _ => Err(SummaryError::AuthRequired),
        }
    }

    fn log_edit(
        &self,
        admin: &str,
        action: &str,
        key: &str,
        detail: serde_json::Value,
    ) -> Result<(), SummaryError> {
        let edit = AdminEdit {
            timestamp: Utc::now(),
            admin: admin.to_string(),
            action: action.to_string(),
            key: key.to_string(),
            detail,
        };
        append_line(
            &self.dir.join("admin.jsonl"),
            &serde_json::to_string(&edit).expect("edit serializes"),
        )?;
        Ok(())
    }

    pub fn admin_log(&self) -> Result<Vec<AdminEdit>, SummaryError> {
        let path = self.dir.join("admin.jsonl");
        if !path.exists() {
            return Ok(Vec::new());
        }
        std::fs::read_to_string(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| SummaryError::Storage(e.to_string())))
            .collect()
    }

    fn check_summary(&self, s: &PivotSummary) -> Result<(), SummaryError> {
        s.check_structure()?;
        let report = validate(s, &self.settings.consortium.journals);
        if report.has_errors() {
            let errors: Vec<&str> = report
                .findings
                .iter()
                .filter(|f| f.severity == Severity::Error)
                .map(|f| f.message.as_str())
                .collect();
            return Err(SummaryError::SchemaViolation(errors.join("; ")));
        }
        Ok(())
    }

    /// Applies a field-level correction to a stored summary or article. The
    /// result is validated like an ingested summary before it replaces the
    /// stored file.
    pub fn correct_summary(
        &self,
        token: Option<&str>,
        admin: &str,
        key_text: &str,
        patch: &SummaryPatch,
    ) -> Result<PivotSummary, SummaryError> {
        self.check_admin(token)?;
        let (key, seq) = resolve_key(&self.settings, key_text)?;
        let _writer = IngestLock::acquire(&self.settings.data_dir.join("ingest.lock"))?;
        let mut s = self.summary(&key)?;
        if let Some(t) = &patch.journal_title {
            s.journal_title = t.clone();
        }
        if let Some(d) = patch.cover_date {
            s.cover_date = d;
        }
        match seq {
            Some(seq) => {
                let a = s
                    .articles
                    .iter_mut()
                    .find(|a| a.seq == seq)
                    .ok_or_else(|| SummaryError::NotFound(key.article(seq).to_string()))?;
                if let Some(t) = &patch.title {
                    a.title = t.clone();
                }
                if let Some(au) = &patch.authors {
                    a.authors = au.clone();
                }
                if let Some(p) = patch.first_page {
                    a.first_page = p;
                }
                if let Some(p) = patch.last_page {
                    a.last_page = p;
                }
                if let Some(ab) = &patch.abstract_text {
                    a.abstract_text = Some(ab.clone()).filter(|t| !t.is_empty());
                }
            }
            None if patch.touches_article() => {
                return Err(SummaryError::BadRequest(
                    "article fields need an article key".into(),
                ));
            }
            None => {}
        }
        self.check_summary(&s)?;
        self.store.replace(&s)?;
        self.log_edit(
            admin,
            "correct",
            key_text,
            serde_json::to_value(patch).expect("patch serializes"),
        )?;
        self.db()?;
        Ok(s)
    }

    /// Adds a summary by hand through the ingestion checks. Arrival is the
    /// time of the edit.
    pub fn add_summary(
        &self,
        token: Option<&str>,
        admin: &str,
        mut s: PivotSummary,
    ) -> Result<PivotSummary, SummaryError> {
        self.check_admin(token)?;
        s.arrival = Utc::now();
        self.check_summary(&s)?;
        let key = s
            .key()
            .map_err(|e| SummaryError::SchemaViolation(e.to_string()))?;
        let _writer = IngestLock::acquire(&self.settings.data_dir.join("ingest.lock"))?;
        let manual = ProviderConfig {
            id: s.provider.clone(),
            adapter: "manual".into(),
            title_filter: TitleFilter::AcceptAll,
        };
        match self.store.store(&s, &manual)? {
            StoreOutcome::Stored(_) => {}
            StoreOutcome::Skipped(_) => return Err(SummaryError::Duplicate(key.to_string())),
        }
        self.log_edit(
            admin,
            "add",
            &key.to_string(),
            serde_json::json!({ "articles": s.articles.len() }),
        )?;
        self.db()?;
        Ok(s)
    }

    pub fn export_stats(
        &self,
        token: Option<&str>,
        from: DateTime<Utc>,
        to: DateTime<Utc>,
    ) -> Result<String, SummaryError> {
        self.check_admin(token)?;
        Ok(export_stats(&self.events.snapshot(), from, to)?)
    }

    /// Sends the digest for `(watermark, now]`. State is saved even when
    /// the sink fails so that partial deliveries are not repeated.
    pub async fn run_digest(
        &self,
        token: Option<&str>,
        now: DateTime<Utc>,
    ) -> Result<DigestRun, SummaryError> {
        self.check_admin(token)?;
        let file = self.digest.lock().await;
        let mut state = file
            .load(self.settings.installed_at())
            .map_err(|e| SummaryError::Storage(e.to_string()))?;
        let summaries = self.summaries()?;
        let subs: Vec<AlertSubscription> = self
            .alerts
            .lock()
            .expect("alert book poisoned")
            .subscriptions
            .values()
            .cloned()
            .collect();
        let result = run_digest(now, &mut state, &summaries, &subs, self.sink.as_ref());
        file.save(&state)
            .map_err(|e| SummaryError::Storage(e.to_string()))?;
        result.map_err(|e| match e {
            DigestError::SinkUnavailable(m) => SummaryError::SinkUnavailable(m),
            DigestError::ClockBehindWatermark { .. } => SummaryError::InvalidRange(e.to_string()),
            DigestError::Io(e) => SummaryError::Storage(e.to_string()),
        })
    }

    pub fn requests(&self) -> Vec<RequestRecord> {
        self.requests
            .lock()
            .expect("request book poisoned")
            .requests
            .values()
            .cloned()
            .collect()
    }
}
