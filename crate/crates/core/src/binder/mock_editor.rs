//! Stand-in editor web sites for tests and demos: a static file tree served
//! read-only, with a log of every request method seen.

use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::extract::{Request, State};
use axum::http::{header, Method, StatusCode};
use axum::response::Response;
use axum::Router;

#[derive(Clone)]
pub struct MockEditorSite {
    root: PathBuf,
    log: Arc<Mutex<Vec<(Method, String)>>>,
}

impl MockEditorSite {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        MockEditorSite {
            root: root.into(),
            log: Arc::new(Mutex::new(Vec::new())),
        }
    }

    pub fn requests(&self) -> Vec<(Method, String)> {
        self.log.lock().expect("log poisoned").clone()
    }

    pub fn count(&self, method: &Method, path_suffix: &str) -> usize {
        self.requests()
            .iter()
            .filter(|(m, p)| m == method && p.ends_with(path_suffix))
            .count()
    }

    pub fn router(&self) -> Router {
        Router::new().fallback(serve).with_state(self.clone())
    }
}

fn safe_join(root: &Path, uri_path: &str) -> Option<PathBuf> {
    let mut out = root.to_path_buf();
    for c in Path::new(uri_path.trim_start_matches('/')).components() {
        match c {
            Component::Normal(p) => out.push(p),
            Component::CurDir => {}
            _ => return None,
        }
    }
    Some(out)
}

async fn serve(State(site): State<MockEditorSite>, req: Request) -> Response {
    let path = req.uri().path().to_string();
    site.log
        .lock()
        .expect("log poisoned")
        .push((req.method().clone(), path.clone()));
    let status = |s: StatusCode| {
        Response::builder()
            .status(s)
            .body(Body::empty())
            .expect("response")
    };
    if req.method() != Method::GET && req.method() != Method::HEAD {
        return status(StatusCode::METHOD_NOT_ALLOWED);
    }
    let Some(file) = safe_join(&site.root, &path) else {
        return status(StatusCode::BAD_REQUEST);
    };
    match tokio::fs::read(&file).await {
        Ok(bytes) if file.is_file() => {
            let ctype = match file.extension().and_then(|e| e.to_str()) {
                Some("html") => "text/html; charset=utf-8",
                Some("pdf") => "application/pdf",
                _ => "application/octet-stream",
            };
            let body = if req.method() == Method::HEAD {
                Body::empty()
            } else {
                Body::from(bytes.clone())
            };
            Response::builder()
                .header(header::CONTENT_TYPE, ctype)
                .header(header::CONTENT_LENGTH, bytes.len())
                .body(body)
                .expect("response")
        }
        _ => status(StatusCode::NOT_FOUND),
    }
}
