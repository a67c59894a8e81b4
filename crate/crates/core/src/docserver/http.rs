//! Document server over HTTP.
//!
//! | method | path | body | answer |
//! |---|---|---|---|
//! | GET | `/documents/{key}` | | document bytes |
//! | GET | `/documents/{key}/meta` | | `StoredDocument` |
//! | POST | `/documents/{key}/fetch` | `ArticleMeta` | `StoredDocument` |
//! | POST | `/documents/{key}/digitalize` | scan bytes | `StoredDocument` |
//! | POST | `/print-jobs` | `PrintRequest` | `Job` |
//! | POST | `/mail-jobs` | `MailRequest` | `Job` |
//! | POST | `/mail-jobs/{id}/complete` | | `Job` |
//! | GET | `/jobs?state=queued` | | `[Job]` |
//! | GET | `/jobs/{id}` | | `Job` |
//! | GET | `/ledger` | | `[LedgerEntry]` |

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use url::Url;

use crate::api::{decode, ApiError, ClientError};
use crate::ledger::LedgerEntry;
use crate::model::ArticleKey;

use super::{
    ArticleMeta, DocError, DocServerApi, DocumentOrigin, DocumentServer, Job, JobState,
    MailRequest, PrintRequest, StoredDocument,
};

impl From<DocError> for ApiError {
    fn from(e: DocError) -> Self {
        let status = match &e {
            DocError::NotSubscribed(_)
            | DocError::PrinterNotAuthorized(_)
            | DocError::DigitalizedOnly(_) => StatusCode::FORBIDDEN,
            DocError::JobNotFound(_) | DocError::NotFound(_) => StatusCode::NOT_FOUND,
            DocError::JobAlreadyCompleted(_) | DocError::DigitalizationNotOffered(_) => {
                StatusCode::CONFLICT
            }
            DocError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            DocError::ResolveFailed(_) | DocError::DownloadFailed(_) | DocError::Unreachable(_) => {
                StatusCode::BAD_GATEWAY
            }
            DocError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let message = match &e {
            DocError::NotSubscribed(m)
            | DocError::ResolveFailed(m)
            | DocError::DownloadFailed(m)
            | DocError::DigitalizationNotOffered(m)
            | DocError::PrinterNotAuthorized(m)
            | DocError::JobNotFound(m)
            | DocError::JobAlreadyCompleted(m)
            | DocError::NotFound(m)
            | DocError::DigitalizedOnly(m)
            | DocError::InvalidRequest(m)
            | DocError::Storage(m)
            | DocError::Unreachable(m) => m.clone(),
        };
        ApiError::new(status, e.code(), message)
    }
}

fn parse_key(raw: &str) -> Result<ArticleKey, ApiError> {
    raw.parse()
        .map_err(|e| ApiError::bad_request(format!("bad article key `{raw}`: {e}")))
}

type Srv = State<Arc<DocumentServer>>;

pub fn router(server: Arc<DocumentServer>) -> Router {
    Router::new()
        .route("/documents/:key", get(download))
        .route("/documents/:key/meta", get(meta))
        .route("/documents/:key/fetch", post(fetch))
        .route("/documents/:key/digitalize", post(digitalize))
        .route("/print-jobs", post(print_job))
        .route("/mail-jobs", post(mail_job))
        .route("/mail-jobs/:id/complete", post(complete_mail))
        .route("/jobs", get(list_jobs))
        .route("/jobs/:id", get(job))
        .route("/ledger", get(ledger))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(server)
}

async fn download(State(s): Srv, Path(key): Path<String>) -> Result<Response, ApiError> {
    let key = parse_key(&key)?;
    let (doc, bytes) = s.read(&key)?;
    if doc.origin == DocumentOrigin::Digitalization {
        return Err(DocError::DigitalizedOnly(key.to_string()).into());
    }
    Ok((
        [
            (header::CONTENT_TYPE, "application/octet-stream".to_string()),
            (header::HeaderName::from_static("x-checksum"), doc.checksum),
        ],
        bytes,
    )
        .into_response())
}

async fn meta(State(s): Srv, Path(key): Path<String>) -> Result<Json<StoredDocument>, ApiError> {
    let key = parse_key(&key)?;
    let doc = s
        .lookup(&key)?
        .ok_or_else(|| DocError::NotFound(key.to_string()))?;
    Ok(Json(doc))
}

async fn fetch(
    State(s): Srv,
    Path(key): Path<String>,
    Json(m): Json<ArticleMeta>,
) -> Result<Json<StoredDocument>, ApiError> {
    let key = parse_key(&key)?;
    Ok(Json(s.deliver_electronic(&key, &m).await?))
}

async fn digitalize(
    State(s): Srv,
    Path(key): Path<String>,
    scan: Bytes,
) -> Result<Json<StoredDocument>, ApiError> {
    let key = parse_key(&key)?;
    Ok(Json(s.digitalize(&key, &scan).await?))
}

async fn print_job(State(s): Srv, Json(req): Json<PrintRequest>) -> Result<Json<Job>, ApiError> {
    Ok(Json(s.submit_print(&req).await?))
}

async fn mail_job(State(s): Srv, Json(req): Json<MailRequest>) -> Result<Json<Job>, ApiError> {
    Ok(Json(s.dispatch_photocopy(
        &req.plan,
        &req.article,
        req.pages,
    )?))
}

async fn complete_mail(State(s): Srv, Path(id): Path<String>) -> Result<Json<Job>, ApiError> {
    Ok(Json(s.complete_mail_job(&id)?))
}

#[derive(Deserialize)]
struct JobFilter {
    state: Option<String>,
}

async fn list_jobs(State(s): Srv, Query(f): Query<JobFilter>) -> Result<Json<Vec<Job>>, ApiError> {
    let state = f
        .state
        .map(|s| s.parse::<JobState>())
        .transpose()
        .map_err(ApiError::bad_request)?;
    Ok(Json(s.jobs(state)))
}

async fn job(State(s): Srv, Path(id): Path<String>) -> Result<Json<Job>, ApiError> {
    Ok(Json(s.get_job(&id)?))
}

async fn ledger(State(s): Srv) -> Json<Vec<LedgerEntry>> {
    Json(s.ledger().entries())
}

/// Client for a remote document server.
#[derive(Debug, Clone)]
pub struct HttpDocClient {
    base: Url,
    client: reqwest::Client,
}

fn client_error(e: ClientError) -> DocError {
    match e {
        ClientError::Remote { code, message, .. } => DocError::from_code(&code, message),
        other => DocError::Unreachable(other.to_string()),
    }
}

impl HttpDocClient {
    pub fn new(base: Url) -> Self {
        HttpDocClient {
            base,
            client: reqwest::Client::builder()
                .timeout(Duration::from_secs(60))
                .build()
                .expect("HTTP client"),
        }
    }

    pub fn base(&self) -> &Url {
        &self.base
    }

    fn url(&self, path: &str) -> Url {
        self.base.join(path).expect("valid base URL")
    }

    async fn send<T: serde::de::DeserializeOwned>(
        &self,
        req: reqwest::RequestBuilder,
    ) -> Result<T, DocError> {
        let resp = req
            .send()
            .await
            .map_err(|e| DocError::Unreachable(format!("{}: {e}", self.base)))?;
        decode(resp).await.map_err(client_error)
    }

    pub async fn digitalize(
        &self,
        article: &ArticleKey,
        scan: Vec<u8>,
    ) -> Result<StoredDocument, DocError> {
        self.send(
            self.client
                .post(self.url(&format!("documents/{article}/digitalize")))
                .body(scan),
        )
        .await
    }

    pub async fn complete_mail(&self, id: &str) -> Result<Job, DocError> {
        self.send(
            self.client
                .post(self.url(&format!("mail-jobs/{id}/complete"))),
        )
        .await
    }

    pub async fn jobs(&self, state: Option<JobState>) -> Result<Vec<Job>, DocError> {
        let mut url = self.url("jobs");
        if let Some(s) = state {
            url.query_pairs_mut()
                .append_pair("state", &format!("{s:?}").to_lowercase());
        }
        self.send(self.client.get(url)).await
    }

    pub async fn ledger(&self) -> Result<Vec<LedgerEntry>, DocError> {
        self.send(self.client.get(self.url("ledger"))).await
    }

    pub async fn download(&self, article: &ArticleKey) -> Result<Vec<u8>, DocError> {
        let resp = self
            .client
            .get(self.url(&format!("documents/{article}")))
            .send()
            .await
            .map_err(|e| DocError::Unreachable(e.to_string()))?;
        let status = resp.status();
        let bytes = resp
            .bytes()
            .await
            .map_err(|e| DocError::Unreachable(e.to_string()))?;
        if status.is_success() {
            Ok(bytes.to_vec())
        } else {
            Err(client_error(crate::api::remote_error(
                status.as_u16(),
                &bytes,
            )))
        }
    }
}

#[async_trait]
impl DocServerApi for HttpDocClient {
    async fn fetch(
        &self,
        article: &ArticleKey,
        meta: &ArticleMeta,
    ) -> Result<StoredDocument, DocError> {
        self.send(
            self.client
                .post(self.url(&format!("documents/{article}/fetch")))
                .json(meta),
        )
        .await
    }

    async fn submit_print(&self, req: &PrintRequest) -> Result<Job, DocError> {
        self.send(self.client.post(self.url("print-jobs")).json(req))
            .await
    }

    async fn submit_mail(&self, req: &MailRequest) -> Result<Job, DocError> {
        self.send(self.client.post(self.url("mail-jobs")).json(req))
            .await
    }

    async fn job(&self, id: &str) -> Result<Job, DocError> {
        self.send(self.client.get(self.url(&format!("jobs/{id}"))))
            .await
    }

    fn locator(&self, article: &ArticleKey) -> String {
        self.url(&format!("documents/{article}")).to_string()
    }
}
