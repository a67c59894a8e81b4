// Paper deliveries between document servers: a remote print, a scan then
// print, and a mailed photocopy completed by an operator. Prints the jobs
// and the resulting billing and copyright ledgers.
//
//     cargo run --example paper_delivery

use std::error::Error;
use std::sync::Arc;

use async_trait::async_trait;
use docgate::binder::{BinderClient, BinderError, ResolveRequest, ResolveResult};
use docgate::demo::{demo_settings, DemoPorts, J1, J2, J3};
use docgate::docserver::{ArticleMeta, DocumentServer, PrintRequest};
use docgate::net::{HttpFetch, NetError};
use docgate::policy::{plan_delivery, ServiceRights};
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
        let open = |id: &str| {
            DocumentServer::open(
                id.into(),
                settings.clone(),
                settings.docserver_dir(&id.into()),
                Arc::new(Editor),
                Arc::new(Editor),
            )
        };
        let (a, b, c) = (open("A")?, open("B")?, open("C")?);
        let plan = |who: &str, issn: &str| {
            plan_delivery(
                settings.institution(&who.into()),
                &ServiceRights::all(),
                &issn.parse().expect("issn"),
                &settings.consortium,
            )
        };
        let meta = |title: &str, first_page, last_page| ArticleMeta {
            title: title.into(),
            first_page,
            last_page,
            editor: "editor-x".into(),
        };

        let mut out = String::new();
        let print = a
            .submit_print(&PrintRequest {
                plan: plan("D", J1)?,
                article: format!("{J1}:v3:i1:a1").parse()?,
                meta: meta("Routing in sparse graphs", 1, 12),
            })
            .await?;
        out.push_str(&format!(
            "{} {:?} {:?}\n",
            print.id, print.kind, print.state
        ));

        let scan_key = format!("{J2}:v7:i2:a1").parse()?;
        let waiting = b
            .submit_print(&PrintRequest {
                plan: plan("A", J2)?,
                article: scan_key,
                meta: meta("Modal fixpoints in verification", 101, 118),
            })
            .await?;
        out.push_str(&format!(
            "{} {:?} before the scan\n",
            waiting.id, waiting.state
        ));
        b.digitalize(&waiting.article, b"%PDF scanned").await?;
        out.push_str(&format!(
            "{} {:?} after the scan\n",
            waiting.id,
            b.get_job(&waiting.id)?.state
        ));

        let mail =
            c.dispatch_photocopy(&plan("D", J3)?, &format!("{J3}:v12:i3:a1").parse()?, 24)?;
        out.push_str(&format!("{} {:?}\n", mail.id, mail.state));
        let done = c.complete_mail_job(&mail.id)?;
        out.push_str(&format!("{} {:?}\n", done.id, done.state));
        if let Err(e) = c.complete_mail_job(&mail.id) {
            out.push_str(&format!("second completion: {}\n", e.code()));
        }

        for server in [&a, &b, &c] {
            for r in server.ledger().billing() {
                out.push_str(&format!(
                    "billing {} -> {} {} {}\n",
                    r.source_institution,
                    r.requesting_institution,
                    r.mode.as_str(),
                    r.fee
                ));
            }
            for r in server.ledger().copyright() {
                out.push_str(&format!(
                    "copyright {} {} {}\n",
                    r.paying_institution, r.article, r.fee
                ));
            }
        }
        Ok(out)
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?);
    Ok(())
}
