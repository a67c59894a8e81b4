//! The `docgate` command line: service roles and operator commands.
//!
//! Failures print one JSON line `{"error": CODE, "message": ...}` on stderr
//! and exit with 2 (configuration), 3 (remote service unreachable) or
//! 4 (domain error).

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::Router;
use chrono::Utc;
use clap::{Parser, Subcommand};

use crate::api::{ClientError, ErrorBody};
use crate::binder::http::{router as binder_router, HttpBinderClient};
use crate::binder::mock_editor::MockEditorSite;
use crate::binder::Binder;
use crate::config::{ConfigError, Settings};
use crate::demo::{self, DemoPorts};
use crate::docserver::http::{router as docserver_router, HttpDocClient};
use crate::docserver::{DocError, DocServerDirectory, DocumentServer, JobKind};
use crate::ingest::{BatchReport, IngestError, Pipeline};
use crate::model::InstitutionId;
use crate::net::ReqwestFetch;
use crate::summary::http::{parse_instant, HttpSummaryClient};
use crate::summary::{resolve_article_key, RequestRecord, SummaryError, SummaryServer};

#[derive(Debug, Parser)]
#[command(
    name = "docgate",
    version,
    about = "Consortium document-access gateway"
)]
pub struct Cli {
    /// Consortium configuration file.
    #[arg(long, global = true, env = "DOCGATE_CONFIG")]
    pub config: Option<PathBuf>,
    /// Administrator token; defaults to the configured one.
    #[arg(long, global = true, env = "DOCGATE_TOKEN")]
    pub token: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one service role in the foreground.
    Serve {
        #[command(subcommand)]
        role: Role,
    },
    /// Ingest feed files from a provider.
    Ingest {
        provider: String,
        files: Vec<PathBuf>,
    },
    /// Replay every archived file of a provider.
    Reprocess { provider: String },
    /// Send alert digests for summaries arrived since the last run.
    DigestRun,
    /// Request an article on behalf of a user at an address.
    Request {
        ip: IpAddr,
        category: String,
        article: String,
    },
    /// Show a request, refreshing deferred ones.
    RequestStatus { id: u64 },
    /// Complete a manual job: post a photocopy, or supply the scan for a
    /// digitalize-then-print job.
    JobComplete {
        id: String,
        #[arg(long)]
        scan: Option<PathBuf>,
    },
    /// Export usage statistics over [from, to) as CSV.
    StatsExport {
        from: String,
        to: String,
        out: PathBuf,
    },
    /// Write the four-institution demo (configuration, feeds, editor sites).
    SeedDemo {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long, default_value_t = 7400)]
        base_port: u16,
    },
}

#[derive(Debug, Subcommand)]
pub enum Role {
    Summary {
        #[arg(long, env = "DOCGATE_LISTEN")]
        listen: Option<SocketAddr>,
    },
    Document {
        institution: String,
        #[arg(long, env = "DOCGATE_LISTEN")]
        listen: Option<SocketAddr>,
    },
    Binder {
        #[arg(long, env = "DOCGATE_LISTEN")]
        listen: Option<SocketAddr>,
    },
    /// Static mock editor sites, for demos.
    Editors {
        root: PathBuf,
        #[arg(long, env = "DOCGATE_LISTEN")]
        listen: SocketAddr,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct CliError {
    pub exit: u8,
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(exit: u8, code: &str, message: impl Into<String>) -> Self {
        CliError {
            exit,
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new(2, "Config", message)
    }

    /// The one-line form printed on stderr.
    pub fn line(&self) -> String {
        serde_json::to_string(&ErrorBody {
            error: self.code.clone(),
            message: self.message.clone(),
        })
        .expect("error serializes")
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Unreachable(m) => CliError::new(3, "Unreachable", m),
            ClientError::Remote { code, message, .. } => CliError::new(4, &code, message),
            ClientError::Decode(m) => CliError::new(3, "BadResponse", m),
        }
    }
}

impl From<DocError> for CliError {
    fn from(e: DocError) -> Self {
        match e {
            DocError::Unreachable(m) => CliError::new(3, "Unreachable", m),
            other => CliError::new(4, other.code(), other.to_string()),
        }
    }
}

impl From<SummaryError> for CliError {
    fn from(e: SummaryError) -> Self {
        CliError::new(4, e.code(), e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let code = match &e {
            IngestError::AdapterUnknown(_) => "AdapterUnknown",
            IngestError::MalformedFeed { .. } => "MalformedFeed",
            IngestError::SchemaViolation { .. } => "SchemaViolation",
            IngestError::StorageUnavailable(_) => "StorageUnavailable",
            IngestError::UnknownProvider(_) => "UnknownProvider",
            _ => "Ingest",
        };
        CliError::new(4, code, e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new(4, "Io", format!("{}: {e}", path.display()))
}

fn load(cli_config: &Option<PathBuf>) -> Result<Arc<Settings>, CliError> {
    let path = cli_config
        .as_ref()
        .ok_or_else(|| CliError::config("no configuration: pass --config or set DOCGATE_CONFIG"))?;
    Ok(Arc::new(Settings::load(path)?))
}

fn listen_addr(explicit: Option<SocketAddr>, url: &url::Url) -> Result<SocketAddr, CliError> {
    if let Some(a) = explicit {
        return Ok(a);
    }
    let host = url.host_str().unwrap_or("127.0.0.1");
    let port = url
        .port_or_known_default()
        .ok_or_else(|| CliError::config(format!("no port in {url}")))?;
    format!("{host}:{port}")
        .parse()
        .map_err(|_| CliError::config(format!("cannot listen on {url}; pass --listen")))
}

/// Binder service for the configured editors.
pub fn binder_app(settings: &Settings) -> Router {
    let binder = Binder::from_config(&settings.config.editors, Arc::new(ReqwestFetch::default()));
    binder_router(Arc::new(binder))
}

/// Document server of one institution, talking to the configured binder.
pub fn document_app(settings: Arc<Settings>, institution: &str) -> Result<Router, CliError> {
    let id: InstitutionId = institution.into();
    if settings.institution(&id).is_none() {
        return Err(CliError::config(format!(
            "unknown institution `{institution}`"
        )));
    }
    let binder = Arc::new(HttpBinderClient::new(settings.config.server.binder.clone()));
    let server = DocumentServer::open(
        id.clone(),
        settings.clone(),
        settings.docserver_dir(&id),
        binder,
        Arc::new(ReqwestFetch::default()),
    )?;
    Ok(docserver_router(Arc::new(server)))
}

/// Summary server with HTTP clients for every configured document server.
pub fn summary_server(settings: Arc<Settings>) -> Result<Arc<SummaryServer>, CliError> {
    let directory = DocServerDirectory::from_settings(&settings);
    Ok(Arc::new(SummaryServer::open(settings, directory)?))
}

async fn bind(addr: SocketAddr) -> Result<tokio::net::TcpListener, CliError> {
    tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| CliError::config(format!("cannot listen on {addr}: {e}")))
}

async fn shutdown() {
    let _ = tokio::signal::ctrl_c().await;
}

async fn serve(role: Role, config: &Option<PathBuf>) -> Result<(), CliError> {
    let internal = |e: std::io::Error| CliError::new(1, "Internal", e.to_string());
    match role {
        Role::Editors { root, listen } => {
            let listener = bind(listen).await?;
            tracing::info!(%listen, root = %root.display(), "mock editor sites");
            axum::serve(listener, MockEditorSite::new(root).router())
                .with_graceful_shutdown(shutdown())
                .await
                .map_err(internal)
        }
        Role::Summary { listen } => {
            let settings = load(config)?;
            let addr = listen_addr(listen, &settings.config.server.summary_server)?;
            let server = summary_server(settings)?;
            let listener = bind(addr).await?;
            tracing::info!(%addr, "summary server");
            axum::serve(
                listener,
                crate::summary::http::router(server)
                    .into_make_service_with_connect_info::<SocketAddr>(),
            )
            .with_graceful_shutdown(shutdown())
            .await
            .map_err(internal)
        }
        Role::Document {
            institution,
            listen,
        } => {
            let settings = load(config)?;
            let url = settings
                .institution(&institution.as_str().into())
                .and_then(|i| i.document_server.clone());
            let addr = match (listen, url) {
                (Some(a), _) => a,
                (None, Some(u)) => listen_addr(None, &u)?,
                (None, None) => {
                    return Err(CliError::config(format!(
                        "{institution} has no document server; pass --listen"
                    )))
                }
            };
            let app = document_app(settings, &institution)?;
            let listener = bind(addr).await?;
            tracing::info!(%addr, %institution, "document server");
            axum::serve(listener, app)
                .with_graceful_shutdown(shutdown())
                .await
                .map_err(internal)
        }
        Role::Binder { listen } => {
            let settings = load(config)?;
            let addr = listen_addr(listen, &settings.config.server.binder)?;
            let listener = bind(addr).await?;
            tracing::info!(%addr, "binder");
            axum::serve(listener, binder_app(&settings))
                .with_graceful_shutdown(shutdown())
                .await
                .map_err(internal)
        }
    }
}

pub fn format_batch(report: &BatchReport) -> String {
    let c = &report.counts;
    let mut out = format!(
        "stored={} skipped={} filtered={} duplicate={} rejected={} failed_files={}\n",
        c.stored,
        c.skipped_filtered + c.skipped_duplicate,
        c.skipped_filtered,
        c.skipped_duplicate,
        c.rejected,
        c.failed_files
    );
    for f in report.files.iter().filter(|f| f.error.is_some()) {
        out.push_str(&format!(
            "failed {}: {}\n",
            f.name,
            f.error.as_deref().unwrap_or_default()
        ));
    }
    for (summary, findings) in &report.findings {
        for f in &findings.findings {
            out.push_str(&format!(
                "{:?} {} {}: {}\n",
                f.severity, summary, f.code, f.message
            ));
        }
    }
    out
}

pub fn format_request(r: &RequestRecord) -> String {
    let mut out = format!("{}/{:?} request={}", r.plan.mode.as_str(), r.status, r.id);
    if let Some(job) = &r.job {
        out.push_str(&format!(" job={}", job.id));
    }
    out.push('\n');
    out.push_str(&format!(
        "plan: source={} requester={} destination={} format={} access={:?}\n",
        r.plan
            .source_institution
            .as_ref()
            .map_or("-", |i| i.as_str()),
        r.plan
            .requester_institution
            .as_ref()
            .map_or("-", |i| i.as_str()),
        r.plan
            .destination
            .as_ref()
            .map_or_else(|| "-".to_string(), |d| format!("{d:?}")),
        r.plan
            .delivery_format
            .map_or_else(|| "-".to_string(), |f| format!("{f:?}")),
        r.plan.access_class,
    ));
    if let Some(l) = &r.locator {
        out.push_str(&format!("locator: {l}\n"));
    }
    out.push_str(&format!("message: {}\n", r.message));
    out
}

fn summary_client(settings: &Settings, token: &Option<String>) -> HttpSummaryClient {
    let token = token
        .clone()
        .or_else(|| Some(settings.config.server.admin_token.clone()).filter(|t| !t.is_empty()));
    HttpSummaryClient::new(settings.config.server.summary_server.clone(), token)
}

/// Runs one command, returning what it prints on stdout.
pub async fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Serve { role } => serve(role, &cli.config).await.map(|_| String::new()),
        Command::Ingest { provider, files } => {
            let settings = load(&cli.config)?;
            let cfg = settings.provider(&provider).ok_or_else(|| {
                CliError::new(
                    4,
                    "UnknownProvider",
                    format!("provider `{provider}` is not configured"),
                )
            })?;
            if files.is_empty() {
                return Err(CliError::new(4, "NoInput", "no feed file given"));
            }
            let mut batch = Vec::new();
            for f in &files {
                let raw = std::fs::read(f).map_err(|e| io_error(f, e))?;
                batch.push((f.display().to_string(), raw));
            }
            let report = Pipeline::new(&settings.data_dir).run_batch(
                cfg,
                &settings.consortium.journals,
                &batch,
                Utc::now(),
            )?;
            Ok(format_batch(&report))
        }
        Command::Reprocess { provider } => {
            let settings = load(&cli.config)?;
            let cfg = settings.provider(&provider).ok_or_else(|| {
                CliError::new(
                    4,
                    "UnknownProvider",
                    format!("provider `{provider}` is not configured"),
                )
            })?;
            let report = Pipeline::new(&settings.data_dir)
                .reprocess_archive(cfg, &settings.consortium.journals)?;
            Ok(format_batch(&report))
        }
        Command::DigestRun => {
            let settings = load(&cli.config)?;
            let run = summary_client(&settings, &cli.token)
                .digest_run(None)
                .await?;
            let mut out = format!(
                "run={} window=({}, {}] messages={}\n",
                run.run_id,
                run.window_start.to_rfc3339(),
                run.window_end.to_rfc3339(),
                run.messages.len()
            );
            for m in &run.messages {
                let keys: Vec<String> = m.summaries.iter().map(|k| k.to_string()).collect();
                out.push_str(&format!("{} {}\n", m.email, keys.join(" ")));
            }
            Ok(out)
        }
        Command::Request {
            ip,
            category,
            article,
        } => {
            let settings = load(&cli.config)?;
            let client = summary_client(&settings, &cli.token);
            let r = client
                .request(
                    ip,
                    &category,
                    &article,
                    &settings.config.server.proxy_header,
                )
                .await?;
            Ok(format_request(&r))
        }
        Command::RequestStatus { id } => {
            let settings = load(&cli.config)?;
            Ok(format_request(
                &summary_client(&settings, &cli.token)
                    .request_status(id)
                    .await?,
            ))
        }
        Command::JobComplete { id, scan } => {
            let settings = load(&cli.config)?;
            let inst = id
                .split('.')
                .next()
                .filter(|p| !p.is_empty() && id.contains('.'))
                .ok_or_else(|| {
                    CliError::new(4, "JobNotFound", format!("`{id}` is not a job id"))
                })?;
            let url = settings
                .institution(&inst.into())
                .and_then(|i| i.document_server.clone())
                .ok_or_else(|| {
                    CliError::new(4, "JobNotFound", format!("{inst} runs no document server"))
                })?;
            let client = HttpDocClient::new(url);
            let job = crate::docserver::DocServerApi::job(&client, &id).await?;
            let job = match (&job.kind, scan) {
                (JobKind::Mail { .. }, _) => client.complete_mail(&id).await?,
                (JobKind::Print { .. }, Some(path)) => {
                    let bytes = std::fs::read(&path).map_err(|e| io_error(&path, e))?;
                    client.digitalize(&job.article, bytes).await?;
                    crate::docserver::DocServerApi::job(&client, &id).await?
                }
                (JobKind::Print { .. }, None) => {
                    return Err(CliError::new(
                        4,
                        "ScanRequired",
                        format!("{id} waits for a scan: pass --scan FILE"),
                    ))
                }
            };
            Ok(format!("{} {:?} {}\n", job.id, job.state, job.article))
        }
        Command::StatsExport { from, to, out } => {
            let settings = load(&cli.config)?;
            for t in [&from, &to] {
                parse_instant(t).map_err(|m| CliError::new(4, "InvalidRange", m))?;
            }
            let csv = summary_client(&settings, &cli.token)
                .export_stats(&from, &to)
                .await?;
            crate::fsutil::write_atomic(&out, csv.as_bytes()).map_err(|e| io_error(&out, e))?;
            Ok(format!(
                "rows={} out={}\n",
                csv.lines().count().saturating_sub(1),
                out.display()
            ))
        }
        Command::SeedDemo { dir, base_port } => {
            let ports = DemoPorts::from_base(base_port);
            let report =
                demo::seed(&dir, &ports).map_err(|e| CliError::new(4, "Seed", e.to_string()))?;
            let p = ports;
            Ok(format!(
                "config={}\nfixtures={} {}\neditors={}\n{}services: summary={} documents={},{},{} binder={} editors={}\n",
                report.config_path.display(),
                report.batch1.display(),
                report.editoralert.display(),
                report.editor_sites.display(),
                format_batch(&report.ingest),
                p.summary,
                p.docservers[0],
                p.docservers[1],
                p.docservers[2],
                p.binder,
                p.editors
            ))
        }
    }
}

/// Resolves an operator article reference (ISSN or journal code) against
/// the configuration.
pub fn article_key(settings: &Settings, text: &str) -> Result<crate::model::ArticleKey, CliError> {
    resolve_article_key(settings, text).map_err(CliError::from)
}
