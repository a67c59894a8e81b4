#![allow(dead_code)]

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use async_trait::async_trait;
use chrono::{Duration, Utc};
use url::Url;

use docgate::binder::mock_editor::MockEditorSite;
use docgate::binder::{BinderClient, BinderError, ResolveRequest, ResolveResult};
use docgate::config::Settings;
use docgate::demo::{batch1_tsv, demo_settings, editoralert_feed, write_editor_sites, DemoPorts};
use docgate::docserver::{DocServerDirectory, DocumentServer};
use docgate::ingest::Pipeline;
use docgate::mail::MemorySink;
use docgate::model::InstitutionId;
use docgate::net::{HttpFetch, NetError};
use docgate::summary::SummaryServer;

/// Binder wrapper counting resolutions.
pub struct Counting<B> {
    pub inner: B,
    pub calls: AtomicUsize,
}

impl<B> Counting<B> {
    pub fn new(inner: B) -> Self {
        Counting {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl<B: BinderClient> BinderClient for Counting<B> {
    async fn resolve(&self, req: &ResolveRequest) -> Result<ResolveResult, BinderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.resolve(req).await
    }
}

/// Resolves every article to a fixed editor host.
pub struct FakeBinder;

#[async_trait]
impl BinderClient for FakeBinder {
    async fn resolve(&self, req: &ResolveRequest) -> Result<ResolveResult, BinderError> {
        Ok(ResolveResult {
            url: Url::parse(&format!(
                "http://editor.test/{}/{}.pdf",
                req.issn, req.first_page
            ))
            .unwrap(),
            resolver: req.editor.clone(),
            elapsed_ms: 0,
        })
    }
}

pub struct FakePdf;

#[async_trait]
impl HttpFetch for FakePdf {
    async fn head(&self, _: &Url) -> Result<u16, NetError> {
        Ok(200)
    }
    async fn get(&self, url: &Url) -> Result<(u16, Vec<u8>), NetError> {
        Ok((200, format!("%PDF {url}").into_bytes()))
    }
}

/// Serves the demo editor sites on an ephemeral port.
pub async fn spawn_editor_sites(root: &Path) -> (SocketAddr, MockEditorSite) {
    write_editor_sites(root).unwrap();
    let site = MockEditorSite::new(root);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = site.router();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (addr, site)
}

pub fn ingest_demo(settings: &Settings) {
    let pipeline = Pipeline::new(&settings.data_dir);
    let at = Utc::now() - Duration::hours(1);
    for (provider, name, feed) in [
        ("swetslike", "batch1.tsv", batch1_tsv()),
        ("editoralert", "editoralert.txt", editoralert_feed()),
    ] {
        pipeline
            .run_batch(
                settings.provider(provider).unwrap(),
                &settings.consortium.journals,
                &[(name.into(), feed.into_bytes())],
                at,
            )
            .unwrap();
    }
}

/// In-process summary server over the demo consortium with both fixture
/// feeds ingested and three document servers.
pub struct Harness {
    pub dir: tempfile::TempDir,
    pub settings: Arc<Settings>,
    pub server: SummaryServer,
    pub docs: HashMap<&'static str, Arc<DocumentServer>>,
    pub binder: Arc<Counting<FakeBinder>>,
    pub sink: Arc<MemorySink>,
}

pub fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let settings = Arc::new(demo_settings(&DemoPorts::default(), dir.path()));
    ingest_demo(&settings);
    let binder = Arc::new(Counting::new(FakeBinder));
    let mut directory = DocServerDirectory::default();
    let mut docs = HashMap::new();
    for inst in ["A", "B", "C"] {
        let id: InstitutionId = inst.into();
        let ds = Arc::new(
            DocumentServer::open(
                id.clone(),
                settings.clone(),
                settings.docserver_dir(&id),
                binder.clone(),
                Arc::new(FakePdf),
            )
            .unwrap(),
        );
        directory.insert(id, ds.clone());
        docs.insert(inst, ds);
    }
    let sink = Arc::new(MemorySink::default());
    let server = SummaryServer::open(settings.clone(), directory)
        .unwrap()
        .with_sink(sink.clone());
    Harness {
        dir,
        settings,
        server,
        docs,
        binder,
        sink,
    }
}
