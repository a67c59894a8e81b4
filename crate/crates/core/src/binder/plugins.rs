use async_trait::async_trait;
use regex::Regex;
use std::sync::OnceLock;
use url::Url;

use crate::net::HttpFetch;

use super::{BinderError, ResolveRequest, ResolverPlugin};

fn expand(template: &str, req: &ResolveRequest) -> String {
    template
        .replace("{issn}", req.issn.as_str())
        .replace("{volume}", &req.volume.to_string())
        .replace("{issue}", &req.issue.to_string())
        .replace("{first_page}", &req.first_page.to_string())
}

fn parse_url(raw: &str) -> Result<Url, BinderError> {
    Url::parse(raw).map_err(|e| BinderError::NotFoundAtEditor(format!("bad URL `{raw}`: {e}")))
}

/// Editors whose article URLs follow a fixed pattern.
pub struct TemplateResolver {
    template: String,
}

impl TemplateResolver {
    pub fn new(template: String) -> Self {
        TemplateResolver { template }
    }
}

#[async_trait]
impl ResolverPlugin for TemplateResolver {
    async fn candidates(
        &self,
        req: &ResolveRequest,
        _http: &dyn HttpFetch,
    ) -> Result<Vec<Url>, BinderError> {
        Ok(vec![parse_url(&expand(&self.template, req))?])
    }
}

/// Editors publishing a per-journal listing page of article links.
pub struct ListingResolver {
    listing: String,
}

impl ListingResolver {
    pub fn new(listing: String) -> Self {
        ListingResolver { listing }
    }
}

fn anchor_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?is)<a\s[^>]*?href\s*=\s*(?:"([^"]*)"|'([^']*)')[^>]*>(.*?)</a\s*>"#)
            .expect("valid pattern")
    })
}

fn normalize(text: &str) -> String {
    let decoded = text
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&");
    decoded
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[async_trait]
impl ResolverPlugin for ListingResolver {
    async fn candidates(
        &self,
        req: &ResolveRequest,
        http: &dyn HttpFetch,
    ) -> Result<Vec<Url>, BinderError> {
        let listing = parse_url(&expand(&self.listing, req))?;
        let (status, body) = http.get(&listing).await?;
        if !(200..300).contains(&status) {
            return Err(BinderError::NotFoundAtEditor(format!(
                "listing {listing} answered {status}"
            )));
        }
        let page = String::from_utf8_lossy(&body);
        let wanted = normalize(&req.title);
        let mut out = Vec::new();
        for cap in anchor_pattern().captures_iter(&page) {
            let href = cap.get(1).or_else(|| cap.get(2)).map_or("", |m| m.as_str());
            let text = cap.get(3).map_or("", |m| m.as_str());
            if normalize(text) == wanted {
                if let Ok(url) = listing.join(&normalize_href(href)) {
                    out.push(url);
                }
            }
        }
        if out.is_empty() {
            return Err(BinderError::NotFoundAtEditor(format!(
                "`{}` not listed at {listing}",
                req.title
            )));
        }
        Ok(out)
    }
}

fn normalize_href(href: &str) -> String {
    href.trim().replace("&amp;", "&")
}
