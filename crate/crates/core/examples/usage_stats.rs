// Browses, searches and requests articles from several institutions, then
// exports the anonymous usage counts as CSV.
//
//     cargo run --example usage_stats

use std::error::Error;
use std::sync::Arc;

use async_trait::async_trait;
use chrono::{Duration, Utc};
use docgate::binder::{BinderClient, BinderError, ResolveRequest, ResolveResult};
use docgate::demo::{batch1_tsv, demo_settings, editoralert_feed, DemoPorts, ADMIN_TOKEN};
use docgate::docserver::{DocServerDirectory, DocumentServer};
use docgate::ingest::Pipeline;
use docgate::net::{HttpFetch, NetError};
use docgate::summary::{Requester, SummaryServer};
use url::Url;

struct Editor;

#[async_trait]
impl BinderClient for Editor {
    async fn resolve(&self, req: &ResolveRequest) -> Result<ResolveResult, BinderError> {
        Ok(ResolveResult {
            url: Url::parse(&format!(
                "http://editor.test/{}/{}.pdf",
                req.issn, req.first_page
            ))
            .expect("url"),
            resolver: req.editor.clone(),
            elapsed_ms: 0,
        })
    }
}

#[async_trait]
impl HttpFetch for Editor {
    async fn head(&self, _: &Url) -> Result<u16, NetError> {
        Ok(200)
    }
    async fn get(&self, url: &Url) -> Result<(u16, Vec<u8>), NetError> {
        Ok((200, format!("%PDF {url}").into_bytes()))
    }
}

pub fn run_example() -> Result<String, Box<dyn Error>> {
    tokio::runtime::Runtime::new()?.block_on(async {
        let dir = tempfile::tempdir()?;
        let settings = Arc::new(demo_settings(&DemoPorts::default(), dir.path()));
        let pipeline = Pipeline::new(&settings.data_dir);
        for (provider, feed) in [
            ("swetslike", batch1_tsv()),
            ("editoralert", editoralert_feed()),
        ] {
            pipeline.run_batch(
                settings.provider(provider).expect("demo provider"),
                &settings.consortium.journals,
                &[(provider.into(), feed.into_bytes())],
                Utc::now() - Duration::hours(1),
            )?;
        }
        let mut directory = DocServerDirectory::default();
        for id in ["A", "B", "C"] {
            let ds = DocumentServer::open(
                id.into(),
                settings.clone(),
                settings.docserver_dir(&id.into()),
                Arc::new(Editor),
                Arc::new(Editor),
            )?;
            directory.insert(id.into(), Arc::new(ds));
        }
        let server = SummaryServer::open(settings.clone(), directory)?;

        let from = Utc::now() - Duration::minutes(1);
        let a = Requester::new("10.1.0.5".parse()?, "researcher");
        let d = Requester::new("10.4.0.9".parse()?, "researcher");
        let student = Requester::new("10.2.0.8".parse()?, "student");
        server.list_issues("J1", &a)?;
        server.list_issues("J1", &a)?;
        server.search("routing", &student)?;
        server.request_article("J1:v3:i1:a1", &a).await?;
        server.request_article("J3:v12:i3:a1", &d).await?;
        let _ = server.request_article("J1:v3:i1:a2", &student).await;
        let to = Utc::now() + Duration::minutes(1);
        Ok(server.export_stats(Some(ADMIN_TOKEN), from, to)?)
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?);
    Ok(())
}
