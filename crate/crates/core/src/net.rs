//! Outbound HTTP used to probe and download from editor sites.

use std::time::Duration;

use async_trait::async_trait;
use thiserror::Error;
use url::Url;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("transport error: {0}")]
    Transport(String),
}

#[async_trait]
pub trait HttpFetch: Send + Sync {
    /// Non-mutating probe; returns the status code.
    async fn head(&self, url: &Url) -> Result<u16, NetError>;
    async fn get(&self, url: &Url) -> Result<(u16, Vec<u8>), NetError>;
}

/// reqwest-backed client: per-attempt timeout, one retry on failure.
#[derive(Debug, Clone)]
pub struct ReqwestFetch {
    client: reqwest::Client,
    timeout: Duration,
    retries: u32,
}

impl Default for ReqwestFetch {
    fn default() -> Self {
        ReqwestFetch::new(Duration::from_secs(5), 1)
    }
}

impl ReqwestFetch {
    pub fn new(timeout: Duration, retries: u32) -> Self {
        ReqwestFetch {
            client: reqwest::Client::builder()
                .timeout(timeout)
                .build()
                .expect("HTTP client"),
            timeout,
            retries,
        }
    }

    async fn attempt<T, F, Fut>(&self, f: F) -> Result<T, NetError>
    where
        F: Fn() -> Fut,
        Fut: std::future::Future<Output = Result<T, reqwest::Error>>,
    {
        let mut last = NetError::Transport("no attempt".into());
        for _ in 0..=self.retries {
            match f().await {
                Ok(v) => return Ok(v),
                Err(e) if e.is_timeout() => last = NetError::Timeout(self.timeout),
                Err(e) => last = NetError::Transport(e.to_string()),
            }
        }
        Err(last)
    }
}

#[async_trait]
impl HttpFetch for ReqwestFetch {
    async fn head(&self, url: &Url) -> Result<u16, NetError> {
        self.attempt(|| async {
            Ok(self
                .client
                .head(url.clone())
                .send()
                .await?
                .status()
                .as_u16())
        })
        .await
    }

    async fn get(&self, url: &Url) -> Result<(u16, Vec<u8>), NetError> {
        self.attempt(|| async {
            let resp = self.client.get(url.clone()).send().await?;
            let status = resp.status().as_u16();
            Ok((status, resp.bytes().await?.to_vec()))
        })
        .await
    }
}
