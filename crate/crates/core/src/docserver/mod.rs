//! Per-institution document server.
//!
//! Full texts live under `docs/<issn>/<volume>-<issue>/<seq>.bin` with a
//! `<seq>.json` sidecar; print and mail deliveries are written to spool
//! directories (`spool/printers/<printer>/`, `spool/mail/`). Documents are
//! never evicted or rewritten once stored.

pub mod http;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use url::Url;

use crate::binder::{BinderClient, ResolveRequest};
use crate::config::Settings;
use crate::fsutil::write_atomic;
use crate::ledger::Ledger;
use crate::model::{ArticleKey, EditorId, InstitutionId};
use crate::net::HttpFetch;
use crate::policy::{
    emit_records, DeliveryMode, DeliveryPlan, Destination, Institution, SubscriptionFormat,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocError {
    #[error("not subscribed: {0}")]
    NotSubscribed(String),
    #[error("resolution failed: {0}")]
    ResolveFailed(String),
    #[error("download failed: {0}")]
    DownloadFailed(String),
    #[error("digitalization not offered: {0}")]
    DigitalizationNotOffered(String),
    #[error("printer not authorized: {0}")]
    PrinterNotAuthorized(String),
    #[error("no such job: {0}")]
    JobNotFound(String),
    #[error("job already completed: {0}")]
    JobAlreadyCompleted(String),
    #[error("document not stored: {0}")]
    NotFound(String),
    #[error("digitalized documents are reserved for paper delivery: {0}")]
    DigitalizedOnly(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("storage error: {0}")]
    Storage(String),
    #[error("document server unreachable: {0}")]
    Unreachable(String),
}

impl DocError {
    pub fn code(&self) -> &'static str {
        match self {
            DocError::NotSubscribed(_) => "NotSubscribed",
            DocError::ResolveFailed(_) => "ResolveFailed",
            DocError::DownloadFailed(_) => "DownloadFailed",
            DocError::DigitalizationNotOffered(_) => "DigitalizationNotOffered",
            DocError::PrinterNotAuthorized(_) => "PrinterNotAuthorized",
            DocError::JobNotFound(_) => "JobNotFound",
            DocError::JobAlreadyCompleted(_) => "JobAlreadyCompleted",
            DocError::NotFound(_) => "NotFound",
            DocError::DigitalizedOnly(_) => "DigitalizedOnly",
            DocError::InvalidRequest(_) => "InvalidRequest",
            DocError::Storage(_) => "Storage",
            DocError::Unreachable(_) => "Unreachable",
        }
    }

    pub fn from_code(code: &str, message: String) -> Self {
        match code {
            "NotSubscribed" => DocError::NotSubscribed(message),
            "ResolveFailed" => DocError::ResolveFailed(message),
            "DownloadFailed" => DocError::DownloadFailed(message),
            "DigitalizationNotOffered" => DocError::DigitalizationNotOffered(message),
            "PrinterNotAuthorized" => DocError::PrinterNotAuthorized(message),
            "JobNotFound" => DocError::JobNotFound(message),
            "JobAlreadyCompleted" => DocError::JobAlreadyCompleted(message),
            "NotFound" => DocError::NotFound(message),
            "DigitalizedOnly" => DocError::DigitalizedOnly(message),
            "InvalidRequest" | "BadRequest" => DocError::InvalidRequest(message),
            "Storage" => DocError::Storage(message),
            _ => DocError::Unreachable(format!("{code}: {message}")),
        }
    }
}

impl From<std::io::Error> for DocError {
    fn from(e: std::io::Error) -> Self {
        DocError::Storage(e.to_string())
    }
}

/// Bibliographic data the binder needs to locate an article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleMeta {
    pub title: String,
    pub first_page: u32,
    pub last_page: u32,
    pub editor: EditorId,
}

impl ArticleMeta {
    pub fn pages(&self) -> u32 {
        self.last_page.saturating_sub(self.first_page) + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DocumentOrigin {
    EditorFetch { url: Url },
    Digitalization,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredDocument {
    pub article: ArticleKey,
    pub origin: DocumentOrigin,
    pub checksum: String,
    pub size: u64,
    pub stored: DateTime<Utc>,
    pub institution: InstitutionId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobKind {
    Print { printer: String },
    Mail { address: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JobState {
    Queued,
    Done,
    Failed,
}

impl std::str::FromStr for JobState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "queued" => Ok(JobState::Queued),
            "done" => Ok(JobState::Done),
            "failed" => Ok(JobState::Failed),
            other => Err(format!("unknown job state `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub kind: JobKind,
    pub article: ArticleKey,
    pub plan: DeliveryPlan,
    pub pages: u32,
    pub state: JobState,
    pub created: DateTime<Utc>,
    pub completed: Option<DateTime<Utc>>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrintRequest {
    pub plan: DeliveryPlan,
    pub article: ArticleKey,
    pub meta: ArticleMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MailRequest {
    pub plan: DeliveryPlan,
    pub article: ArticleKey,
    pub pages: u32,
}

/// Operations the summary server invokes on a document server, in-process
/// or over HTTP.
#[async_trait]
pub trait DocServerApi: Send + Sync {
    async fn fetch(
        &self,
        article: &ArticleKey,
        meta: &ArticleMeta,
    ) -> Result<StoredDocument, DocError>;
    async fn submit_print(&self, req: &PrintRequest) -> Result<Job, DocError>;
    async fn submit_mail(&self, req: &MailRequest) -> Result<Job, DocError>;
    async fn job(&self, id: &str) -> Result<Job, DocError>;
    /// Where a workstation downloads the document.
    fn locator(&self, article: &ArticleKey) -> String;
}

/// Document servers by institution.
#[derive(Clone, Default)]
pub struct DocServerDirectory {
    servers: HashMap<InstitutionId, Arc<dyn DocServerApi>>,
}

impl DocServerDirectory {
    pub fn insert(&mut self, inst: InstitutionId, server: Arc<dyn DocServerApi>) {
        self.servers.insert(inst, server);
    }

    pub fn get(&self, inst: &InstitutionId) -> Option<Arc<dyn DocServerApi>> {
        self.servers.get(inst).cloned()
    }

    /// HTTP clients for every institution with a configured document server.
    pub fn from_settings(settings: &Settings) -> Self {
        let mut d = DocServerDirectory::default();
        for inst in &settings.consortium.institutions {
            if let Some(url) = &inst.document_server {
                d.insert(
                    inst.id.clone(),
                    Arc::new(http::HttpDocClient::new(url.clone())),
                );
            }
        }
        d
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct JobBook {
    next: u64,
    jobs: BTreeMap<String, Job>,
}

pub struct DocumentServer {
    institution: InstitutionId,
    settings: Arc<Settings>,
    root: PathBuf,
    binder: Arc<dyn BinderClient>,
    http: Arc<dyn HttpFetch>,
    ledger: Ledger,
    jobs: Mutex<JobBook>,
    flights: Mutex<HashMap<ArticleKey, Arc<tokio::sync::Mutex<()>>>>,
    public_url: Option<Url>,
}

fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl DocumentServer {
    pub fn open(
        institution: InstitutionId,
        settings: Arc<Settings>,
        root: PathBuf,
        binder: Arc<dyn BinderClient>,
        http: Arc<dyn HttpFetch>,
    ) -> Result<Self, DocError> {
        let inst = settings.institution(&institution).ok_or_else(|| {
            DocError::InvalidRequest(format!("unknown institution `{institution}`"))
        })?;
        let public_url = inst.document_server.clone();
        std::fs::create_dir_all(&root)?;
        let ledger = Ledger::open(root.join("ledger.jsonl"))?;
        let jobs_path = root.join("jobs.json");
        let jobs = if jobs_path.exists() {
            serde_json::from_slice(&std::fs::read(&jobs_path)?)
                .map_err(|e| DocError::Storage(e.to_string()))?
        } else {
            JobBook::default()
        };
        Ok(DocumentServer {
            institution,
            settings,
            root,
            binder,
            http,
            ledger,
            jobs: Mutex::new(jobs),
            flights: Mutex::new(HashMap::new()),
            public_url,
        })
    }

    pub fn institution(&self) -> &InstitutionId {
        &self.institution
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn me(&self) -> &Institution {
        self.settings
            .institution(&self.institution)
            .expect("checked at open")
    }

    fn require_subscription(
        &self,
        article: &ArticleKey,
        format: SubscriptionFormat,
    ) -> Result<(), DocError> {
        if self
            .settings
            .consortium
            .subscribes(&self.institution, &article.issn, format)
        {
            Ok(())
        } else {
            Err(DocError::NotSubscribed(format!(
                "{} holds no {format:?} subscription to {}",
                self.institution, article.issn
            )))
        }
    }

    fn doc_paths(&self, article: &ArticleKey) -> (PathBuf, PathBuf) {
        let dir = self
            .root
            .join("docs")
            .join(article.issn.as_str())
            .join(format!("{}-{}", article.volume, article.issue));
        (
            dir.join(format!("{}.bin", article.seq)),
            dir.join(format!("{}.json", article.seq)),
        )
    }

    /// Stored document metadata, if any.
    pub fn lookup(&self, article: &ArticleKey) -> Result<Option<StoredDocument>, DocError> {
        let (bin, meta) = self.doc_paths(article);
        if !meta.exists() || !bin.exists() {
            return Ok(None);
        }
        let doc = serde_json::from_slice(&std::fs::read(meta)?)
            .map_err(|e| DocError::Storage(e.to_string()))?;
        Ok(Some(doc))
    }

    /// Document bytes, verified against the stored checksum.
    pub fn read(&self, article: &ArticleKey) -> Result<(StoredDocument, Vec<u8>), DocError> {
        let doc = self
            .lookup(article)?
            .ok_or_else(|| DocError::NotFound(article.to_string()))?;
        let bytes = std::fs::read(self.doc_paths(article).0)?;
        if checksum(&bytes) != doc.checksum {
            return Err(DocError::Storage(format!(
                "checksum mismatch for {article}"
            )));
        }
        Ok((doc, bytes))
    }

    fn persist(
        &self,
        article: &ArticleKey,
        origin: DocumentOrigin,
        bytes: &[u8],
    ) -> Result<StoredDocument, DocError> {
        let (bin, meta) = self.doc_paths(article);
        let doc = StoredDocument {
            article: article.clone(),
            origin,
            checksum: checksum(bytes),
            size: bytes.len() as u64,
            stored: Utc::now(),
            institution: self.institution.clone(),
        };
        write_atomic(&bin, bytes)?;
        write_atomic(
            &meta,
            &serde_json::to_vec_pretty(&doc).expect("document serializes"),
        )?;
        Ok(doc)
    }

    fn flight(&self, article: &ArticleKey) -> Arc<tokio::sync::Mutex<()>> {
        self.flights
            .lock()
            .expect("flight table poisoned")
            .entry(article.clone())
            .or_default()
            .clone()
    }

    /// Returns the cached document, or resolves and downloads it. Concurrent
    /// misses on one key share a single upstream fetch.
    pub async fn fetch_or_cache(
        &self,
        article: &ArticleKey,
        meta: &ArticleMeta,
    ) -> Result<StoredDocument, DocError> {
        self.require_subscription(article, SubscriptionFormat::Electronic)?;
        if let Some(doc) = self.lookup(article)? {
            return Ok(doc);
        }
        let gate = self.flight(article);
        let _held = gate.lock().await;
        if let Some(doc) = self.lookup(article)? {
            return Ok(doc);
        }
        let resolved = self
            .binder
            .resolve(&ResolveRequest {
                issn: article.issn.clone(),
                volume: article.volume,
                issue: article.issue,
                first_page: meta.first_page,
                title: meta.title.clone(),
                editor: meta.editor.clone(),
            })
            .await
            .map_err(|e| DocError::ResolveFailed(e.to_string()))?;
        let (status, bytes) = self
            .http
            .get(&resolved.url)
            .await
            .map_err(|e| DocError::DownloadFailed(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(DocError::DownloadFailed(format!(
                "{} answered {status}",
                resolved.url
            )));
        }
        if bytes.is_empty() {
            return Err(DocError::DownloadFailed(format!(
                "{} returned an empty payload",
                resolved.url
            )));
        }
        self.persist(
            article,
            DocumentOrigin::EditorFetch { url: resolved.url },
            &bytes,
        )
    }

    /// Workstation delivery: like [`fetch_or_cache`](Self::fetch_or_cache)
    /// but refuses scanned copies.
    pub async fn deliver_electronic(
        &self,
        article: &ArticleKey,
        meta: &ArticleMeta,
    ) -> Result<StoredDocument, DocError> {
        let doc = self.fetch_or_cache(article, meta).await?;
        if doc.origin == DocumentOrigin::Digitalization {
            return Err(DocError::DigitalizedOnly(article.to_string()));
        }
        Ok(doc)
    }

    /// Stores a scan of a paper-held article, then runs print jobs that were
    /// waiting for it.
    pub async fn digitalize(
        &self,
        article: &ArticleKey,
        scan: &[u8],
    ) -> Result<StoredDocument, DocError> {
        if !self.me().can_digitalize {
            return Err(DocError::DigitalizationNotOffered(format!(
                "{} cannot digitalize paper-version articles",
                self.institution
            )));
        }
        self.require_subscription(article, SubscriptionFormat::Paper)?;
        if scan.is_empty() {
            return Err(DocError::InvalidRequest("empty scan".into()));
        }
        let doc = {
            let gate = self.flight(article);
            let _held = gate.lock().await;
            match self.lookup(article)? {
                Some(existing) => existing,
                None => self.persist(article, DocumentOrigin::Digitalization, scan)?,
            }
        };
        let waiting: Vec<String> = self
            .jobs
            .lock()
            .expect("job book poisoned")
            .jobs
            .values()
            .filter(|j| {
                j.state == JobState::Queued
                    && &j.article == article
                    && matches!(j.kind, JobKind::Print { .. })
            })
            .map(|j| j.id.clone())
            .collect();
        for id in waiting {
            self.run_print(&id)?;
        }
        Ok(doc)
    }

    fn next_job_id(book: &mut JobBook, institution: &InstitutionId, kind: &str) -> String {
        book.next += 1;
        format!("{institution}.{kind}.{}", book.next)
    }

    fn save_jobs(&self, book: &JobBook) -> Result<(), DocError> {
        write_atomic(
            &self.root.join("jobs.json"),
            &serde_json::to_vec_pretty(book).expect("jobs serialize"),
        )?;
        Ok(())
    }

    fn check_source(&self, plan: &DeliveryPlan) -> Result<&Institution, DocError> {
        if plan.source_institution.as_ref() != Some(&self.institution) {
            return Err(DocError::InvalidRequest(format!(
                "plan sources from {:?}, this is {}",
                plan.source_institution, self.institution
            )));
        }
        let requester = plan
            .requester_institution
            .as_ref()
            .and_then(|id| self.settings.institution(id))
            .ok_or_else(|| DocError::InvalidRequest("plan has no known requester".into()))?;
        Ok(requester)
    }

    fn authorized_printer<'a>(&self, plan: &'a DeliveryPlan) -> Result<&'a str, DocError> {
        let requester = self.check_source(plan)?;
        match &plan.destination {
            Some(Destination::Printer(p))
                if requester.authorized_printers.iter().any(|a| a == p) =>
            {
                Ok(p)
            }
            Some(Destination::Printer(p)) => Err(DocError::PrinterNotAuthorized(format!(
                "{p} is not an authorized printer of {}",
                requester.id
            ))),
            other => Err(DocError::InvalidRequest(format!(
                "print plan with destination {other:?}"
            ))),
        }
    }

    fn insert_job(
        &self,
        kind: JobKind,
        label: &str,
        plan: &DeliveryPlan,
        article: &ArticleKey,
        pages: u32,
    ) -> Result<Job, DocError> {
        let mut book = self.jobs.lock().expect("job book poisoned");
        let job = Job {
            id: Self::next_job_id(&mut book, &self.institution, label),
            kind,
            article: article.clone(),
            plan: plan.clone(),
            pages,
            state: JobState::Queued,
            created: Utc::now(),
            completed: None,
            note: None,
        };
        book.jobs.insert(job.id.clone(), job.clone());
        self.save_jobs(&book)?;
        Ok(job)
    }

    /// Prints a stored document for a plan right away.
    pub fn execute_print(
        &self,
        plan: &DeliveryPlan,
        doc: &StoredDocument,
        pages: u32,
    ) -> Result<Job, DocError> {
        let printer = self.authorized_printer(plan)?.to_string();
        let job = self.insert_job(
            JobKind::Print { printer },
            "print",
            plan,
            &doc.article,
            pages,
        )?;
        self.run_print(&job.id)
    }

    /// Queued → Done for a print job whose document is stored: spool the
    /// bytes, then account. The job book lock makes the transition atomic.
    fn run_print(&self, id: &str) -> Result<Job, DocError> {
        let mut book = self.jobs.lock().expect("job book poisoned");
        let job = book
            .jobs
            .get(id)
            .cloned()
            .ok_or_else(|| DocError::JobNotFound(id.into()))?;
        if job.state != JobState::Queued {
            return Err(DocError::JobAlreadyCompleted(id.into()));
        }
        let JobKind::Print { printer } = &job.kind else {
            return Err(DocError::InvalidRequest(format!("{id} is not a print job")));
        };
        let (_, bytes) = self.read(&job.article)?;
        let spool = self
            .root
            .join("spool")
            .join("printers")
            .join(printer)
            .join(format!("{id}.bin"));
        write_atomic(&spool, &bytes)?;
        self.account(&job)?;
        let done = book.jobs.get_mut(id).expect("present");
        done.state = JobState::Done;
        done.completed = Some(Utc::now());
        let done = done.clone();
        self.save_jobs(&book)?;
        Ok(done)
    }

    fn account(&self, job: &Job) -> Result<(), DocError> {
        let requester = self.check_source(&job.plan)?;
        let (billing, copyright) = emit_records(
            &job.plan,
            requester,
            &job.article,
            job.pages,
            &self.settings.config.fees,
            Utc::now(),
        );
        self.ledger.record(billing, copyright)?;
        Ok(())
    }

    fn fail_job(&self, id: &str, note: String) -> Result<Job, DocError> {
        let mut book = self.jobs.lock().expect("job book poisoned");
        let job = book
            .jobs
            .get_mut(id)
            .ok_or_else(|| DocError::JobNotFound(id.into()))?;
        job.state = JobState::Failed;
        job.completed = Some(Utc::now());
        job.note = Some(note);
        let job = job.clone();
        self.save_jobs(&book)?;
        Ok(job)
    }

    /// Accepts a shared-mode print request. Electronic originals are fetched
    /// and printed immediately; paper originals wait for a scan unless one
    /// is already stored.
    pub async fn submit_print(&self, req: &PrintRequest) -> Result<Job, DocError> {
        let printer = self.authorized_printer(&req.plan)?.to_string();
        match req.plan.mode {
            DeliveryMode::PrintAtAuthorizedPrinter => {
                self.require_subscription(&req.article, SubscriptionFormat::Electronic)?;
                let job = self.insert_job(
                    JobKind::Print { printer },
                    "print",
                    &req.plan,
                    &req.article,
                    req.meta.pages(),
                )?;
                match self.fetch_or_cache(&req.article, &req.meta).await {
                    Ok(_) => self.run_print(&job.id),
                    Err(e) => self.fail_job(&job.id, e.to_string()),
                }
            }
            DeliveryMode::DigitalizeThenPrint => {
                if !self.me().can_digitalize {
                    return Err(DocError::DigitalizationNotOffered(
                        self.institution.to_string(),
                    ));
                }
                self.require_subscription(&req.article, SubscriptionFormat::Paper)?;
                let job = self.insert_job(
                    JobKind::Print { printer },
                    "print",
                    &req.plan,
                    &req.article,
                    req.meta.pages(),
                )?;
                if self.lookup(&req.article)?.is_some() {
                    self.run_print(&job.id)
                } else {
                    Ok(job)
                }
            }
            other => Err(DocError::InvalidRequest(format!(
                "{other:?} is not a print mode"
            ))),
        }
    }

    /// Queues a photocopy to be mailed to the requester's institution.
    pub fn dispatch_photocopy(
        &self,
        plan: &DeliveryPlan,
        article: &ArticleKey,
        pages: u32,
    ) -> Result<Job, DocError> {
        if plan.mode != DeliveryMode::PhotocopyPostalMail {
            return Err(DocError::InvalidRequest(format!(
                "{:?} is not a photocopy plan",
                plan.mode
            )));
        }
        let requester = self.check_source(plan)?;
        self.require_subscription(article, SubscriptionFormat::Paper)?;
        let address = requester.postal_address.clone();
        self.insert_job(JobKind::Mail { address }, "mail", plan, article, pages)
    }

    /// Operator confirmation that the photocopy was made and posted.
    pub fn complete_mail_job(&self, id: &str) -> Result<Job, DocError> {
        let mut book = self.jobs.lock().expect("job book poisoned");
        let job = book
            .jobs
            .get(id)
            .cloned()
            .ok_or_else(|| DocError::JobNotFound(id.into()))?;
        let JobKind::Mail { address } = &job.kind else {
            return Err(DocError::InvalidRequest(format!("{id} is not a mail job")));
        };
        if job.state != JobState::Queued {
            return Err(DocError::JobAlreadyCompleted(id.into()));
        }
        let label = format!(
            "Photocopy of {}\nPages: {}\nTo: {}\n",
            job.article, job.pages, address
        );
        write_atomic(
            &self
                .root
                .join("spool")
                .join("mail")
                .join(format!("{id}.txt")),
            label.as_bytes(),
        )?;
        self.account(&job)?;
        let done = book.jobs.get_mut(id).expect("present");
        done.state = JobState::Done;
        done.completed = Some(Utc::now());
        let done = done.clone();
        self.save_jobs(&book)?;
        Ok(done)
    }

    pub fn jobs(&self, state: Option<JobState>) -> Vec<Job> {
        self.jobs
            .lock()
            .expect("job book poisoned")
            .jobs
            .values()
            .filter(|j| state.map_or(true, |s| j.state == s))
            .cloned()
            .collect()
    }

    pub fn get_job(&self, id: &str) -> Result<Job, DocError> {
        self.jobs
            .lock()
            .expect("job book poisoned")
            .jobs
            .get(id)
            .cloned()
            .ok_or_else(|| DocError::JobNotFound(id.into()))
    }
}

#[async_trait]
impl DocServerApi for DocumentServer {
    async fn fetch(
        &self,
        article: &ArticleKey,
        meta: &ArticleMeta,
    ) -> Result<StoredDocument, DocError> {
        self.deliver_electronic(article, meta).await
    }

    async fn submit_print(&self, req: &PrintRequest) -> Result<Job, DocError> {
        DocumentServer::submit_print(self, req).await
    }

    async fn submit_mail(&self, req: &MailRequest) -> Result<Job, DocError> {
        self.dispatch_photocopy(&req.plan, &req.article, req.pages)
    }

    async fn job(&self, id: &str) -> Result<Job, DocError> {
        self.get_job(id)
    }

    fn locator(&self, article: &ArticleKey) -> String {
        match &self.public_url {
            Some(base) => base
                .join(&format!("documents/{article}"))
                .map(|u| u.to_string())
                .unwrap_or_else(|_| format!("{base}documents/{article}")),
            None => format!("docserver://{}/documents/{article}", self.institution),
        }
    }
}

#[cfg(test)]
mod tests;
