use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use url::Url;

use docgate::binder::http::{router, HttpBinderClient};
use docgate::binder::{BinderClient, BinderError, ResolveRequest, ResolveResult};

struct ByEditor;

#[async_trait]
impl BinderClient for ByEditor {
    async fn resolve(&self, req: &ResolveRequest) -> Result<ResolveResult, BinderError> {
        match req.editor.to_string().as_str() {
            "found" => Ok(ResolveResult {
                url: Url::parse(&format!(
                    "http://editor.test/{}/{}.pdf",
                    req.issn, req.first_page
                ))
                .unwrap(),
                resolver: req.editor.clone(),
                elapsed_ms: 3,
            }),
            "missing" => Err(BinderError::NotFoundAtEditor(
                "http://editor.test/x answered 404".into(),
            )),
            "slow" => Err(BinderError::UpstreamTimeout(Duration::from_millis(5000))),
            "down" => Err(BinderError::Unreachable("connection refused".into())),
            _ => Err(BinderError::NoResolver(req.editor.clone())),
        }
    }
}

fn request(editor: &str) -> ResolveRequest {
    ResolveRequest {
        issn: "0000-0019".parse().unwrap(),
        volume: 3,
        issue: 1,
        first_page: 13,
        title: "Congestion games on rings".into(),
        editor: editor.into(),
    }
}

#[tokio::test]
async fn errors_survive_the_wire() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(Arc::new(ByEditor))).await });
    let client = HttpBinderClient::new(Url::parse(&format!("http://{addr}/")).unwrap());

    let hit = client.resolve(&request("found")).await.unwrap();
    assert_eq!(hit.url.as_str(), "http://editor.test/0000-0019/13.pdf");
    assert_eq!(hit.elapsed_ms, 3);

    for editor in ["missing", "slow", "down", "nobody"] {
        let local = ByEditor.resolve(&request(editor)).await.unwrap_err();
        let remote = client.resolve(&request(editor)).await.unwrap_err();
        assert_eq!(remote, local, "{editor}");
    }
}

#[tokio::test]
async fn closed_port_is_unreachable() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let client = HttpBinderClient::new(Url::parse(&format!("http://127.0.0.1:{port}/")).unwrap());
    assert!(matches!(
        client.resolve(&request("found")).await,
        Err(BinderError::Unreachable(_))
    ));
}
