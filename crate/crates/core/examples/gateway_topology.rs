// Boots the whole topology in one process on ephemeral ports (editor sites,
// binder, three document servers, summary server) and walks the four
// delivery scenarios through the HTTP clients.
//
//     cargo run --example gateway_topology

use std::error::Error;
use std::net::SocketAddr;
use std::sync::Arc;

use docgate::binder::mock_editor::MockEditorSite;
use docgate::cli::{binder_app, document_app, summary_server};
use docgate::demo::{demo_config, write_editor_sites, DemoPorts, ADMIN_TOKEN};
use docgate::docserver::http::HttpDocClient;
use docgate::ingest::Pipeline;
use docgate::summary::http::HttpSummaryClient;

async fn bind() -> std::io::Result<(tokio::net::TcpListener, u16)> {
    let l = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let port = l.local_addr()?.port();
    Ok((l, port))
}

pub fn run_example() -> Result<String, Box<dyn Error>> {
    tokio::runtime::Runtime::new()?.block_on(async {
        let dir = tempfile::tempdir()?;
        let (summary_l, summary) = bind().await?;
        let (a_l, a) = bind().await?;
        let (b_l, b) = bind().await?;
        let (c_l, c) = bind().await?;
        let (binder_l, binder) = bind().await?;
        let (editors_l, editors) = bind().await?;
        let ports = DemoPorts {
            summary,
            docservers: [a, b, c],
            binder,
            editors,
        };
        let mut cfg = demo_config(&ports);
        cfg.server.data_dir = dir.path().join("data");
        let settings = Arc::new(cfg.into_settings(dir.path())?);

        let pipeline = Pipeline::new(&settings.data_dir);
        for (provider, feed) in [
            ("swetslike", docgate::demo::batch1_tsv()),
            ("editoralert", docgate::demo::editoralert_feed()),
        ] {
            pipeline.run_batch(
                settings.provider(provider).expect("demo provider"),
                &settings.consortium.journals,
                &[(provider.into(), feed.into_bytes())],
                chrono::Utc::now(),
            )?;
        }

        write_editor_sites(&dir.path().join("editors"))?;
        let site = MockEditorSite::new(dir.path().join("editors")).router();
        tokio::spawn(async move { axum::serve(editors_l, site).await });
        let binder = binder_app(&settings);
        tokio::spawn(async move { axum::serve(binder_l, binder).await });
        for (listener, inst) in [(a_l, "A"), (b_l, "B"), (c_l, "C")] {
            let app = document_app(settings.clone(), inst)?;
            tokio::spawn(async move { axum::serve(listener, app).await });
        }
        let server = summary_server(settings.clone())?;
        let app = docgate::summary::http::router(server)
            .into_make_service_with_connect_info::<SocketAddr>();
        tokio::spawn(async move { axum::serve(summary_l, app).await });

        let client = HttpSummaryClient::new(
            settings.config.server.summary_server.clone(),
            Some(ADMIN_TOKEN.into()),
        );
        let header = settings.config.server.proxy_header.clone();
        let mut out = String::new();
        let scenarios = [
            ("10.1.0.5", "J1:v3:i1:a1"),
            ("10.2.0.5", "J1:v3:i1:a2"),
            ("10.1.0.5", "J2:v7:i2:a1"),
            ("10.4.0.9", "J3:v12:i3:a1"),
        ];
        let mut deferred = Vec::new();
        for (ip, article) in scenarios {
            let r = client
                .request(ip.parse()?, "researcher", article, &header)
                .await?;
            out.push_str(&format!(
                "{ip:<9} {article:<13} {}/{:?} {}\n",
                r.plan.mode.as_str(),
                r.status,
                r.message
            ));
            if let Some(job) = r
                .job
                .clone()
                .filter(|_| r.status == docgate::summary::RequestStatus::Deferred)
            {
                deferred.push((r.id, job));
            }
        }
        for (id, job) in deferred {
            let url = settings
                .institution(&job.institution)
                .and_then(|i| i.document_server.clone())
                .expect("document server");
            let doc = HttpDocClient::new(url);
            if job.id.contains(".mail.") {
                doc.complete_mail(&job.id).await?;
            } else {
                let article = docgate::docserver::DocServerApi::job(&doc, &job.id)
                    .await?
                    .article;
                doc.digitalize(&article, b"%PDF scanned".to_vec()).await?;
            }
            let r = client.request_status(id).await?;
            out.push_str(&format!("request {id} after {}: {:?}\n", job.id, r.status));
        }
        Ok(out)
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?);
    Ok(())
}
