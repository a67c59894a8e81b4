// Serves the mock editor sites and a binder over HTTP, then resolves one
// article per editor: a URL template for editor-x, a listing page for
// editor-y.
//
//     cargo run --example editor_binding

use std::error::Error;
use std::sync::Arc;

use docgate::binder::http::{router, HttpBinderClient};
use docgate::binder::mock_editor::MockEditorSite;
use docgate::binder::{Binder, BinderClient, ResolveRequest};
use docgate::demo::{demo_settings, write_editor_sites, DemoPorts, J1, J2};
use docgate::net::ReqwestFetch;

async fn listen(app: axum::Router) -> std::io::Result<u16> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let port = listener.local_addr()?.port();
    tokio::spawn(async move { axum::serve(listener, app).await });
    Ok(port)
}

pub fn run_example() -> Result<String, Box<dyn Error>> {
    tokio::runtime::Runtime::new()?.block_on(async {
        let dir = tempfile::tempdir()?;
        write_editor_sites(dir.path())?;
        let site = MockEditorSite::new(dir.path());
        let ports = DemoPorts {
            editors: listen(site.router()).await?,
            ..DemoPorts::default()
        };
        let settings = demo_settings(&ports, dir.path());
        let binder =
            Binder::from_config(&settings.config.editors, Arc::new(ReqwestFetch::default()));
        let binder_port = listen(router(Arc::new(binder))).await?;
        let client = HttpBinderClient::new(format!("http://127.0.0.1:{binder_port}/").parse()?);

        let requests = [
            (J1, 3, 1, 1, "Routing in sparse graphs", "editor-x"),
            (J2, 7, 2, 119, "Proof search for linear logic", "editor-y"),
            (J1, 3, 1, 99, "Missing article", "editor-x"),
            (J1, 3, 1, 1, "Routing in sparse graphs", "editor-z"),
        ];
        let mut out = String::new();
        for (issn, volume, issue, first_page, title, editor) in requests {
            let req = ResolveRequest {
                issn: issn.parse()?,
                volume,
                issue,
                first_page,
                title: title.into(),
                editor: editor.into(),
            };
            match client.resolve(&req).await {
                Ok(r) => out.push_str(&format!("{editor}: {}\n", r.url.path())),
                Err(e) => out.push_str(&format!("{editor}: {} ({e})\n", e.code())),
            }
        }
        let mutating = site
            .requests()
            .iter()
            .filter(|(m, _)| m != "GET" && m != "HEAD")
            .count();
        out.push_str(&format!(
            "editor requests: {}, mutating: {mutating}\n",
            site.requests().len()
        ));
        Ok(out)
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?);
    Ok(())
}
