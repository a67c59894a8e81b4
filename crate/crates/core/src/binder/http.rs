//! Binder over HTTP: `POST /resolve` on the service side, and a client
//! implementing [`BinderClient`] against it.

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use url::Url;

use crate::api::{decode, ApiError, ClientError};

use super::{BinderClient, BinderError, ResolveRequest, ResolveResult};

pub fn router(binder: Arc<dyn BinderClient>) -> Router {
    Router::new()
        .route("/resolve", post(resolve))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(binder)
}

async fn resolve(
    State(binder): State<Arc<dyn BinderClient>>,
    Json(req): Json<ResolveRequest>,
) -> Result<Json<ResolveResult>, ApiError> {
    binder.resolve(&req).await.map(Json).map_err(|e| {
        let status = match e {
            BinderError::NoResolver(_) | BinderError::NotFoundAtEditor(_) => StatusCode::NOT_FOUND,
            BinderError::UpstreamTimeout(_) => StatusCode::GATEWAY_TIMEOUT,
            BinderError::Unreachable(_) => StatusCode::BAD_GATEWAY,
        };
        let message = match &e {
            BinderError::UpstreamTimeout(d) => d.as_millis().to_string(),
            BinderError::NotFoundAtEditor(m) | BinderError::Unreachable(m) => m.clone(),
            other => other.to_string(),
        };
        ApiError::new(status, e.code(), message)
    })
}

pub struct HttpBinderClient {
    base: Url,
    client: reqwest::Client,
}

impl HttpBinderClient {
    pub fn new(base: Url) -> Self {
        HttpBinderClient {
            base,
            client: reqwest::Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .expect("HTTP client"),
        }
    }
}

#[async_trait]
impl BinderClient for HttpBinderClient {
    async fn resolve(&self, req: &ResolveRequest) -> Result<ResolveResult, BinderError> {
        let url = self.base.join("resolve").expect("valid base");
        let resp = self
            .client
            .post(url)
            .json(req)
            .send()
            .await
            .map_err(|e| BinderError::Unreachable(e.to_string()))?;
        decode(resp).await.map_err(|e| match e {
            ClientError::Remote { code, message, .. } => match code.as_str() {
                "NoResolver" => BinderError::NoResolver(req.editor.clone()),
                "UpstreamTimeout" => BinderError::UpstreamTimeout(Duration::from_millis(
                    message.parse().unwrap_or(5000),
                )),
                "NotFoundAtEditor" => BinderError::NotFoundAtEditor(message),
                _ => BinderError::Unreachable(message),
            },
            other => BinderError::Unreachable(other.to_string()),
        })
    }
}
