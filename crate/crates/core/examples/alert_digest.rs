// Subscribes two readers to journals, ingests new issues and runs the
// digest twice. The second run finds nothing new.
//
//     cargo run --example alert_digest

use std::error::Error;
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use docgate::demo::{batch1_tsv, demo_settings, editoralert_feed, DemoPorts, ADMIN_TOKEN};
use docgate::docserver::DocServerDirectory;
use docgate::ingest::Pipeline;
use docgate::mail::MemorySink;
use docgate::summary::SummaryServer;

pub fn run_example() -> Result<String, Box<dyn Error>> {
    tokio::runtime::Runtime::new()?.block_on(async {
        let dir = tempfile::tempdir()?;
        let settings = Arc::new(demo_settings(&DemoPorts::default(), dir.path()));
        let sink = Arc::new(MemorySink::default());
        let server = SummaryServer::open(settings.clone(), DocServerDirectory::default())?
            .with_sink(sink.clone());
        server.create_alert("ada@example.org", &["J1".into(), "J9".into()], None)?;
        server.create_alert("bo@example.org", &["0000-0035".into()], None)?;

        let arrival = Utc.with_ymd_and_hms(2001, 10, 2, 8, 0, 0).unwrap();
        let pipeline = Pipeline::new(&settings.data_dir);
        for (provider, feed) in [
            ("swetslike", batch1_tsv()),
            ("editoralert", editoralert_feed()),
        ] {
            pipeline.run_batch(
                settings.provider(provider).expect("demo provider"),
                &settings.consortium.journals,
                &[(provider.into(), feed.into_bytes())],
                arrival,
            )?;
        }

        let mut out = String::new();
        for hours in [24, 48] {
            let run = server
                .run_digest(Some(ADMIN_TOKEN), arrival + Duration::hours(hours))
                .await?;
            out.push_str(&format!(
                "run {} over ({}, {}]: {} message(s)\n",
                run.run_id,
                run.window_start.format("%Y-%m-%d %H:%M"),
                run.window_end.format("%Y-%m-%d %H:%M"),
                run.messages.len()
            ));
        }
        for m in sink.messages() {
            out.push_str(&format!(
                "\nTo: {}\nSubject: {}\n\n{}",
                m.recipient, m.subject, m.body
            ));
        }
        Ok(out)
    })
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?);
    Ok(())
}
