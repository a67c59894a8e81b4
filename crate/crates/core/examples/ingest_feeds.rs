// Runs both demo feeds through the ingestion pipeline, first with a provider
// filter that only admits one journal, then replays the archive after
// widening it.
//
//     cargo run --example ingest_feeds

use std::collections::BTreeSet;
use std::error::Error;

use chrono::Utc;
use docgate::demo::{batch1_tsv, demo_settings, DemoPorts, J1};
use docgate::fsutil::files_with_extension;
use docgate::ingest::{Pipeline, TitleFilter};

pub fn run_example() -> Result<String, Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let settings = demo_settings(&DemoPorts::default(), dir.path());
    let pipeline = Pipeline::new(&settings.data_dir);
    let mut provider = settings
        .provider("swetslike")
        .expect("demo provider")
        .clone();
    provider.title_filter = TitleFilter::Only(BTreeSet::from([J1.parse()?]));

    let mut out = String::new();
    let first = pipeline.run_batch(
        &provider,
        &settings.consortium.journals,
        &[("batch1.tsv".into(), batch1_tsv().into_bytes())],
        Utc::now(),
    )?;
    let c = &first.counts;
    out.push_str(&format!(
        "narrow filter: parsed={} stored={} filtered={} duplicate={}\n",
        c.parsed, c.stored, c.skipped_filtered, c.skipped_duplicate
    ));

    provider.title_filter = TitleFilter::AcceptAll;
    let replay = pipeline.reprocess_archive(&provider, &settings.consortium.journals)?;
    let c = &replay.counts;
    out.push_str(&format!(
        "after widening: parsed={} stored={} duplicate={}\n",
        c.parsed, c.stored, c.skipped_duplicate
    ));
    for path in files_with_extension(pipeline.store().root(), "pivot")? {
        out.push_str(&format!(
            "  {}\n",
            path.strip_prefix(pipeline.store().root())?.display()
        ));
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?);
    Ok(())
}
