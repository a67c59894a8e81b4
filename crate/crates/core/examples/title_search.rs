// Searches titles, author names and journal titles of the demo corpus.
// Abstracts are not searchable.
//
//     cargo run --example title_search -- smith routing

use std::error::Error;

use chrono::Utc;
use docgate::demo::{batch1_tsv, editoralert_feed};
use docgate::ingest::{parse_feed, AdapterRegistry, ProviderConfig, TitleFilter};
use docgate::search::SearchIndex;

fn corpus() -> Result<Vec<docgate::ingest::PivotSummary>, Box<dyn Error>> {
    let adapters = AdapterRegistry::default();
    let mut all = Vec::new();
    for (adapter, feed) in [
        ("swetslike", batch1_tsv()),
        ("editoralert", editoralert_feed()),
    ] {
        let provider = ProviderConfig {
            id: adapter.into(),
            adapter: adapter.into(),
            title_filter: TitleFilter::AcceptAll,
        };
        all.extend(parse_feed(
            feed.as_bytes(),
            &provider,
            &adapters,
            Utc::now(),
        )?);
    }
    Ok(all)
}

pub fn search(query: &str) -> Result<String, Box<dyn Error>> {
    let summaries = corpus()?;
    let index = SearchIndex::build(&summaries);
    let mut out = format!("{query:?}:\n");
    for hit in index.search(query) {
        out.push_str(&format!(
            "  {} [{}] {} / {}\n",
            hit.article,
            hit.score,
            hit.title,
            hit.authors.join("; ")
        ));
    }
    Ok(out)
}

pub fn run_example() -> Result<String, Box<dyn Error>> {
    let mut out = String::new();
    for q in [
        "smith routing",
        "Dürrenmatt",
        "quasiperiodic",
        "journal networks",
    ] {
        out.push_str(&search(q)?);
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        print!("{}", run_example()?);
    } else {
        print!("{}", search(&args.join(" "))?);
    }
    Ok(())
}
