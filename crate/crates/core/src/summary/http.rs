//! Summary server over HTTP. Bodies are JSON; errors use the shared
//! `{"error": CODE, "message": ...}` body.
//!
//! | method | path | notes |
//! |---|---|---|
//! | GET | `/journals?domain=` | grouped by domain |
//! | GET | `/journals/{issn}/issues` | icons for the caller |
//! | GET | `/search?q=` | |
//! | POST | `/requests` | `{"article": "J3:v12:i3:a1"}` |
//! | GET | `/requests/{id}` | polls the delivery job |
//! | POST | `/alerts` | `{"email": ..., "journals": [...]}` |
//! | DELETE | `/alerts/{id}` | deactivates |
//! | GET | `/alerts?email=` | active subscriptions |
//! | PUT | `/admin/summaries/{key}` | `SummaryPatch` |
//! | POST | `/admin/summaries` | pivot summary as JSON |
//! | GET | `/admin/stats/export?from=&to=` | `text/csv` |
//! | POST | `/admin/digest/run` | optional `{"now": ...}` |
//!
//! The caller's address is the TCP peer, or the first address of the
//! configured proxy header when the peer is a trusted proxy. The user
//! category comes from `X-User-Category`; admin routes want
//! `Authorization: Bearer <token>` and take the admin name from `X-Admin-Id`.

use std::net::{IpAddr, SocketAddr};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{ConnectInfo, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::api::{decode, remote_error, ApiError, ClientError};
use crate::digest::{AlertSubscription, DigestRun};
use crate::docserver::DocError;
use crate::ingest::PivotSummary;
use crate::model::Domain;
use crate::search::SearchHit;

use super::{
    DomainGroup, IssueListing, RequestRecord, Requester, SummaryError, SummaryPatch, SummaryServer,
};

pub const CATEGORY_HEADER: &str = "x-user-category";
pub const EMAIL_HEADER: &str = "x-user-email";
pub const ADMIN_ID_HEADER: &str = "x-admin-id";

impl From<SummaryError> for ApiError {
    fn from(e: SummaryError) -> Self {
        let status = match &e {
            SummaryError::NotFound(_) => StatusCode::NOT_FOUND,
            SummaryError::RightsDenied(_) => StatusCode::FORBIDDEN,
            SummaryError::Unavailable(_)
            | SummaryError::UnknownIssn(_)
            | SummaryError::SchemaViolation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SummaryError::AuthRequired => StatusCode::UNAUTHORIZED,
            SummaryError::InvalidRange(_) | SummaryError::BadRequest(_) => StatusCode::BAD_REQUEST,
            SummaryError::Duplicate(_) => StatusCode::CONFLICT,
            SummaryError::AlreadyRunning(_) | SummaryError::SinkUnavailable(_) => {
                StatusCode::SERVICE_UNAVAILABLE
            }
            SummaryError::Document(DocError::Unreachable(_)) => StatusCode::BAD_GATEWAY,
            SummaryError::Document(d) => return ApiError::from(d.clone()),
            SummaryError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

type Srv = State<Arc<SummaryServer>>;

pub fn router(server: Arc<SummaryServer>) -> Router {
    Router::new()
        .route("/journals", get(journals))
        .route("/journals/:issn/issues", get(issues))
        .route("/search", get(search))
        .route("/requests", post(request))
        .route("/requests/:id", get(request_status))
        .route("/alerts", post(create_alert).get(list_alerts))
        .route("/alerts/:id", axum::routing::delete(delete_alert))
        .route("/admin/summaries", post(add_summary))
        .route("/admin/summaries/:key", put(correct_summary))
        .route("/admin/stats/export", get(export))
        .route("/admin/digest/run", post(digest_run))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(server)
}

/// Serves the router, recording peer addresses for client-IP resolution.
pub async fn serve(
    listener: tokio::net::TcpListener,
    server: Arc<SummaryServer>,
) -> std::io::Result<()> {
    axum::serve(
        listener,
        router(server).into_make_service_with_connect_info::<SocketAddr>(),
    )
    .await
}

fn header_str<'a>(headers: &'a HeaderMap, name: &str) -> Option<&'a str> {
    headers
        .get(name)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|v| !v.is_empty())
}

fn requester(server: &SummaryServer, peer: SocketAddr, headers: &HeaderMap) -> Requester {
    let cfg = &server.settings().config.server;
    let mut ip = peer.ip();
    if let IpAddr::V6(v6) = ip {
        if let Some(v4) = v6.to_ipv4_mapped() {
            ip = IpAddr::V4(v4);
        }
    }
    if cfg.trusted_proxies.contains(&ip) {
        if let Some(forwarded) = header_str(headers, &cfg.proxy_header)
            .and_then(|v| v.split(',').next())
            .and_then(|v| v.trim().parse().ok())
        {
            ip = forwarded;
        }
    }
    Requester {
        ip,
        category: header_str(headers, CATEGORY_HEADER).map(String::from),
        email: header_str(headers, EMAIL_HEADER).map(String::from),
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    header_str(headers, header::AUTHORIZATION.as_str())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
}

fn admin_id(headers: &HeaderMap) -> String {
    header_str(headers, ADMIN_ID_HEADER)
        .unwrap_or("admin")
        .to_string()
}

#[derive(Deserialize)]
struct DomainFilter {
    domain: Option<String>,
}

async fn journals(
    State(s): Srv,
    Query(f): Query<DomainFilter>,
) -> Result<Json<Vec<DomainGroup>>, ApiError> {
    let domain = f
        .domain
        .filter(|d| !d.is_empty())
        .map(|d| d.parse::<Domain>())
        .transpose()
        .map_err(ApiError::bad_request)?;
    Ok(Json(s.list_journals(domain)))
}

async fn issues(
    State(s): Srv,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    headers: HeaderMap,
    Path(issn): Path<String>,
) -> Result<Json<IssueListing>, ApiError> {
    let who = requester(&s, peer, &headers);
    Ok(Json(s.list_issues(&issn, &who)?))
}

#[derive(Deserialize)]
struct SearchQuery {
    #[serde(default)]
    q: String,
}

async fn search(
    State(s): Srv,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    headers: HeaderMap,
    Query(q): Query<SearchQuery>,
) -> Result<Json<Vec<SearchHit>>, ApiError> {
    let who = requester(&s, peer, &headers);
    Ok(Json(s.search(&q.q, &who)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArticleRequest {
    pub article: String,
}

async fn request(
    State(s): Srv,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    headers: HeaderMap,
    Json(body): Json<ArticleRequest>,
) -> Result<Json<RequestRecord>, ApiError> {
    let who = requester(&s, peer, &headers);
    Ok(Json(s.request_article(&body.article, &who).await?))
}

async fn request_status(
    State(s): Srv,
    Path(id): Path<u64>,
) -> Result<Json<RequestRecord>, ApiError> {
    Ok(Json(s.request_status(id).await?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlertRequest {
    pub email: String,
    pub journals: Vec<String>,
}

async fn create_alert(
    State(s): Srv,
    ConnectInfo(peer): ConnectInfo<SocketAddr>,
    headers: HeaderMap,
    Json(body): Json<AlertRequest>,
) -> Result<Json<AlertSubscription>, ApiError> {
    let who = requester(&s, peer, &headers);
    Ok(Json(s.create_alert(
        &body.email,
        &body.journals,
        Some(&who),
    )?))
}

async fn delete_alert(
    State(s): Srv,
    Path(id): Path<u64>,
) -> Result<Json<AlertSubscription>, ApiError> {
    Ok(Json(s.delete_alert(id)?))
}

#[derive(Deserialize)]
struct AlertFilter {
    email: Option<String>,
}

async fn list_alerts(State(s): Srv, Query(f): Query<AlertFilter>) -> Json<Vec<AlertSubscription>> {
    Json(s.list_alerts(f.email.as_deref()))
}

async fn correct_summary(
    State(s): Srv,
    headers: HeaderMap,
    Path(key): Path<String>,
    Json(patch): Json<SummaryPatch>,
) -> Result<Json<PivotSummary>, ApiError> {
    Ok(Json(s.correct_summary(
        bearer(&headers),
        &admin_id(&headers),
        &key,
        &patch,
    )?))
}

async fn add_summary(
    State(s): Srv,
    headers: HeaderMap,
    Json(summary): Json<PivotSummary>,
) -> Result<Json<PivotSummary>, ApiError> {
    Ok(Json(s.add_summary(
        bearer(&headers),
        &admin_id(&headers),
        summary,
    )?))
}

/// Accepts RFC 3339 instants or plain dates (midnight UTC).
pub fn parse_instant(raw: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| format!("`{raw}` is neither a date nor an RFC 3339 instant"))
}

#[derive(Deserialize)]
struct Range {
    from: String,
    to: String,
}

async fn export(
    State(s): Srv,
    headers: HeaderMap,
    Query(r): Query<Range>,
) -> Result<Response, ApiError> {
    s.check_admin(bearer(&headers))?;
    let from = parse_instant(&r.from).map_err(ApiError::bad_request)?;
    let to = parse_instant(&r.to).map_err(ApiError::bad_request)?;
    let csv = s.export_stats(bearer(&headers), from, to)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DigestTrigger {
    #[serde(default)]
    pub now: Option<DateTime<Utc>>,
}

async fn digest_run(
    State(s): Srv,
    headers: HeaderMap,
    body: Option<Json<DigestTrigger>>,
) -> Result<Json<DigestRun>, ApiError> {
    let now = body.and_then(|b| b.0.now).unwrap_or_else(Utc::now);
    Ok(Json(s.run_digest(bearer(&headers), now).await?))
}

/// Client for the summary server, used by the command line.
#[derive(Debug, Clone)]
pub struct HttpSummaryClient {
    base: Url,
    client: reqwest::Client,
    token: Option<String>,
}

impl HttpSummaryClient {
    pub fn new(base: Url, token: Option<String>) -> Self {
        HttpSummaryClient {
            base,
            client: reqwest::Client::builder()
                .timeout(Duration::from_secs(60))
                .build()
                .expect("HTTP client"),
            token,
        }
    }

    fn url(&self, path: &str) -> Url {
        self.base.join(path).expect("valid base URL")
    }

    fn admin(&self, req: reqwest::RequestBuilder) -> reqwest::RequestBuilder {
        match &self.token {
            Some(t) => req.bearer_auth(t),
            None => req,
        }
    }

    async fn send<T: serde::de::DeserializeOwned>(
        &self,
        req: reqwest::RequestBuilder,
    ) -> Result<T, ClientError> {
        let resp = req
            .send()
            .await
            .map_err(|e| ClientError::Unreachable(format!("{}: {e}", self.base)))?;
        decode(resp).await
    }

    /// Places a request on behalf of a user at `ip` (sent as the proxy
    /// header, honored when this host is a trusted proxy).
    pub async fn request(
        &self,
        ip: IpAddr,
        category: &str,
        article: &str,
        proxy_header: &str,
    ) -> Result<RequestRecord, ClientError> {
        self.send(
            self.client
                .post(self.url("requests"))
                .header(proxy_header, ip.to_string())
                .header(CATEGORY_HEADER, category)
                .json(&ArticleRequest {
                    article: article.to_string(),
                }),
        )
        .await
    }

    pub async fn request_status(&self, id: u64) -> Result<RequestRecord, ClientError> {
        self.send(self.client.get(self.url(&format!("requests/{id}"))))
            .await
    }

    pub async fn journals(&self, domain: Option<Domain>) -> Result<Vec<DomainGroup>, ClientError> {
        let mut url = self.url("journals");
        if let Some(d) = domain {
            url.query_pairs_mut().append_pair("domain", d.as_str());
        }
        self.send(self.client.get(url)).await
    }

    pub async fn digest_run(&self, now: Option<DateTime<Utc>>) -> Result<DigestRun, ClientError> {
        self.send(
            self.admin(self.client.post(self.url("admin/digest/run")))
                .json(&DigestTrigger { now }),
        )
        .await
    }

    pub async fn export_stats(&self, from: &str, to: &str) -> Result<String, ClientError> {
        let mut url = self.url("admin/stats/export");
        url.query_pairs_mut()
            .append_pair("from", from)
            .append_pair("to", to);
        let resp = self
            .admin(self.client.get(url))
            .send()
            .await
            .map_err(|e| ClientError::Unreachable(format!("{}: {e}", self.base)))?;
        let status = resp.status();
        let bytes = resp.bytes().await?;
        if status.is_success() {
            String::from_utf8(bytes.to_vec()).map_err(|e| ClientError::Decode(e.to_string()))
        } else {
            Err(remote_error(status.as_u16(), &bytes))
        }
    }
}
