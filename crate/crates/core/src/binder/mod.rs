//! Resolution of bibliographic metadata to a full-text URL on the editor's
//! site, through one resolver plugin per editor.

pub mod http;
pub mod mock_editor;
mod plugins;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::model::{EditorId, Issn};
use crate::net::{HttpFetch, NetError};

pub use plugins::{ListingResolver, TemplateResolver};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveRequest {
    pub issn: Issn,
    pub volume: u32,
    pub issue: u32,
    pub first_page: u32,
    pub title: String,
    pub editor: EditorId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveResult {
    pub url: Url,
    pub resolver: EditorId,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BinderError {
    #[error("no resolver registered for editor `{0}`")]
    NoResolver(EditorId),
    #[error("article not found at editor: {0}")]
    NotFoundAtEditor(String),
    #[error("editor site timed out after {0:?}")]
    UpstreamTimeout(Duration),
    #[error("binder unreachable: {0}")]
    Unreachable(String),
}

impl BinderError {
    pub fn code(&self) -> &'static str {
        match self {
            BinderError::NoResolver(_) => "NoResolver",
            BinderError::NotFoundAtEditor(_) => "NotFoundAtEditor",
            BinderError::UpstreamTimeout(_) => "UpstreamTimeout",
            BinderError::Unreachable(_) => "Unreachable",
        }
    }
}

impl From<NetError> for BinderError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::Timeout(d) => BinderError::UpstreamTimeout(d),
            NetError::Transport(m) => BinderError::NotFoundAtEditor(m),
        }
    }
}

/// An editor-specific strategy producing candidate URLs, best first.
#[async_trait]
pub trait ResolverPlugin: Send + Sync {
    async fn candidates(
        &self,
        req: &ResolveRequest,
        http: &dyn HttpFetch,
    ) -> Result<Vec<Url>, BinderError>;
}

/// Anything that can resolve a request: the in-process [`Binder`] or a
/// remote binder over HTTP.
#[async_trait]
pub trait BinderClient: Send + Sync {
    async fn resolve(&self, req: &ResolveRequest) -> Result<ResolveResult, BinderError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "resolver", rename_all = "lowercase")]
pub enum EditorConfig {
    /// URL template with `{issn}`, `{volume}`, `{issue}`, `{first_page}`.
    Template { id: EditorId, template: String },
    /// Listing page URL template (same placeholders); the article link is
    /// the anchor whose text matches the title.
    Listing { id: EditorId, listing: String },
}

impl EditorConfig {
    pub fn id(&self) -> &EditorId {
        match self {
            EditorConfig::Template { id, .. } | EditorConfig::Listing { id, .. } => id,
        }
    }

    pub fn plugin(&self) -> Arc<dyn ResolverPlugin> {
        match self {
            EditorConfig::Template { template, .. } => {
                Arc::new(TemplateResolver::new(template.clone()))
            }
            EditorConfig::Listing { listing, .. } => {
                Arc::new(ListingResolver::new(listing.clone()))
            }
        }
    }
}

pub struct Binder {
    plugins: RwLock<HashMap<EditorId, Arc<dyn ResolverPlugin>>>,
    http: Arc<dyn HttpFetch>,
}

impl Binder {
    pub fn new(http: Arc<dyn HttpFetch>) -> Self {
        Binder {
            plugins: RwLock::new(HashMap::new()),
            http,
        }
    }

    pub fn from_config(editors: &[EditorConfig], http: Arc<dyn HttpFetch>) -> Self {
        let b = Binder::new(http);
        for e in editors {
            b.register_resolver(e.id().clone(), e.plugin());
        }
        b
    }

    /// Later registrations for the same editor replace earlier ones.
    pub fn register_resolver(&self, editor: EditorId, plugin: Arc<dyn ResolverPlugin>) {
        let mut plugins = self.plugins.write().expect("binder registry poisoned");
        if plugins.insert(editor.clone(), plugin).is_some() {
            tracing::warn!(%editor, "resolver replaced");
        }
    }
}

#[async_trait]
impl BinderClient for Binder {
    async fn resolve(&self, req: &ResolveRequest) -> Result<ResolveResult, BinderError> {
        let started = Instant::now();
        let plugin = self
            .plugins
            .read()
            .expect("binder registry poisoned")
            .get(&req.editor)
            .cloned()
            .ok_or_else(|| BinderError::NoResolver(req.editor.clone()))?;
        let mut last_error = None;
        for url in plugin.candidates(req, self.http.as_ref()).await? {
            if !matches!(url.scheme(), "http" | "https") {
                continue;
            }
            match self.http.head(&url).await {
                Ok(status) if (200..300).contains(&status) => {
                    return Ok(ResolveResult {
                        url,
                        resolver: req.editor.clone(),
                        elapsed_ms: started.elapsed().as_millis() as u64,
                    })
                }
                Ok(status) => {
                    last_error = Some(BinderError::NotFoundAtEditor(format!(
                        "{url} answered {status}"
                    )))
                }
                Err(e) => last_error = Some(e.into()),
            }
        }
        Err(last_error.unwrap_or_else(|| {
            BinderError::NotFoundAtEditor(format!(
                "{} v{} p{}",
                req.issn, req.volume, req.first_page
            ))
        }))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::sync::Mutex;

    /// Serves a fixed set of URLs; records every method used.
    #[derive(Default)]
    pub(crate) struct FakeSite {
        pub pages: HashMap<String, Vec<u8>>,
        pub calls: Mutex<Vec<(&'static str, String)>>,
        pub timeout: bool,
    }

    #[async_trait]
    impl HttpFetch for FakeSite {
        async fn head(&self, url: &Url) -> Result<u16, NetError> {
            self.calls.lock().unwrap().push(("HEAD", url.to_string()));
            if self.timeout {
                return Err(NetError::Timeout(Duration::from_secs(5)));
            }
            Ok(if self.pages.contains_key(url.as_str()) {
                200
            } else {
                404
            })
        }
        async fn get(&self, url: &Url) -> Result<(u16, Vec<u8>), NetError> {
            self.calls.lock().unwrap().push(("GET", url.to_string()));
            if self.timeout {
                return Err(NetError::Timeout(Duration::from_secs(5)));
            }
            Ok(match self.pages.get(url.as_str()) {
                Some(b) => (200, b.clone()),
                None => (404, Vec::new()),
            })
        }
    }

    fn req(editor: &str) -> ResolveRequest {
        ResolveRequest {
            issn: "0000-0019".parse().unwrap(),
            volume: 1,
            issue: 1,
            first_page: 13,
            title: "Congestion games".into(),
            editor: editor.into(),
        }
    }

    fn site() -> Arc<FakeSite> {
        let mut s = FakeSite::default();
        s.pages
            .insert("http://x.test/0000-0019/1/13.pdf".into(), b"%PDF".to_vec());
        s.pages.insert(
            "http://y.test/0000-0019/listing.html".into(),
            br#"<ul><li><a href="/docs/a1.pdf">Routing in sparse graphs</a></li>
<li><a href='/docs/a2.pdf'>  Congestion
   GAMES </a></li></ul>"#
                .to_vec(),
        );
        s.pages
            .insert("http://y.test/docs/a2.pdf".into(), b"%PDF".to_vec());
        Arc::new(s)
    }

    #[tokio::test]
    async fn template_editor() {
        let binder = Binder::new(site());
        binder.register_resolver(
            "x".into(),
            Arc::new(TemplateResolver::new(
                "http://x.test/{issn}/{volume}/{first_page}.pdf".into(),
            )),
        );
        let r = binder.resolve(&req("x")).await.unwrap();
        assert_eq!(r.url.as_str(), "http://x.test/0000-0019/1/13.pdf");
        assert_eq!(r.resolver.as_str(), "x");
    }

    #[tokio::test]
    async fn listing_editor() {
        let s = site();
        let binder = Binder::new(s.clone());
        binder.register_resolver(
            "y".into(),
            Arc::new(ListingResolver::new(
                "http://y.test/{issn}/listing.html".into(),
            )),
        );
        let r = binder.resolve(&req("y")).await.unwrap();
        assert_eq!(r.url.as_str(), "http://y.test/docs/a2.pdf");
        assert!(s
            .calls
            .lock()
            .unwrap()
            .iter()
            .all(|(m, _)| *m == "GET" || *m == "HEAD"));
    }

    #[tokio::test]
    async fn unknown_and_replaced_resolvers() {
        let binder = Binder::new(site());
        assert_eq!(
            binder.resolve(&req("x")).await,
            Err(BinderError::NoResolver("x".into()))
        );
        binder.register_resolver(
            "x".into(),
            Arc::new(TemplateResolver::new("http://x.test/nope".into())),
        );
        assert!(matches!(
            binder.resolve(&req("x")).await,
            Err(BinderError::NotFoundAtEditor(_))
        ));
        binder.register_resolver(
            "x".into(),
            Arc::new(TemplateResolver::new(
                "http://x.test/{issn}/{volume}/{first_page}.pdf".into(),
            )),
        );
        assert!(binder.resolve(&req("x")).await.is_ok());
    }

    #[tokio::test]
    async fn never_returns_unprobed_url() {
        let mut s = FakeSite::default();
        s.pages.insert(
            "http://y.test/0000-0019/listing.html".into(),
            br#"<a href="/gone.pdf">Congestion games</a>"#.to_vec(),
        );
        let binder = Binder::new(Arc::new(s));
        binder.register_resolver(
            "y".into(),
            Arc::new(ListingResolver::new(
                "http://y.test/{issn}/listing.html".into(),
            )),
        );
        assert!(matches!(
            binder.resolve(&req("y")).await,
            Err(BinderError::NotFoundAtEditor(_))
        ));
    }

    #[tokio::test]
    async fn timeout_surfaces() {
        let s = FakeSite {
            timeout: true,
            ..Default::default()
        };
        let binder = Binder::new(Arc::new(s));
        binder.register_resolver(
            "x".into(),
            Arc::new(TemplateResolver::new("http://x.test/{issn}".into())),
        );
        assert!(matches!(
            binder.resolve(&req("x")).await,
            Err(BinderError::UpstreamTimeout(_))
        ));
    }
}
