// Fetches one article through institution A's document server several
// times, concurrently and after the fact, and counts editor downloads.
//
//     cargo run --example document_cache

use std::error::Error;
use std::sync::Arc;

use axum::http::Method;
use docgate::binder::mock_editor::MockEditorSite;
use docgate::binder::Binder;
use docgate::demo::{demo_settings, write_editor_sites, DemoPorts, J1};
use docgate::docserver::{ArticleMeta, DocumentServer};
use docgate::net::ReqwestFetch;

pub fn run_example() -> Result<String, Box<dyn Error>> {
    tokio::runtime::Runtime::new()?.block_on(async {
        let dir = tempfile::tempdir()?;
        write_editor_sites(&dir.path().join("editors"))?;
        let site = MockEditorSite::new(dir.path().join("editors"));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let ports = DemoPorts {
            editors: listener.local_addr()?.port(),
            ..DemoPorts::default()
        };
        let app = site.router();
        tokio::spawn(async move { axum::serve(listener, app).await });

        let settings = Arc::new(demo_settings(&ports, &dir.path().join("data")));
        let http = Arc::new(ReqwestFetch::default());
        let binder = Arc::new(Binder::from_config(&settings.config.editors, http.clone()));
        let a = Arc::new(DocumentServer::open("A".into(), settings.clone(), settings.docserver_dir(&"A".into()), binder, http)?);

        let key: docgate::model::ArticleKey = format!("{J1}:v3:i1:a2").parse()?;
        let meta = ArticleMeta {
            title: "Congestion games on rings".into(),
            first_page: 13,
            last_page: 30,
            editor: "editor-x".into(),
        };
        let mut tasks = Vec::new();
        for _ in 0..8 {
            let (a, key, meta) = (a.clone(), key.clone(), meta.clone());
            tasks.push(tokio::spawn(async move { a.fetch_or_cache(&key, &meta).await }));
        }
        for t in tasks {
            t.await??;
        }
        let doc = a.fetch_or_cache(&key, &meta).await?;
        let downloads = site.count(&Method::GET, "/x/0000-0019/3/13.pdf");
        Ok(format!(
            "{} stored at {} ({} bytes, sha256 {}...)\n9 requests, {downloads} editor download(s)\n",
            doc.article,
            doc.institution,
            doc.size,
            &doc.checksum[..12]
        ))
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?);
    Ok(())
}
