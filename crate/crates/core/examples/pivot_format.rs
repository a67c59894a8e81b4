// Parses an editor alert feed and round-trips each issue through the pivot
// document format.
//
//     cargo run --example pivot_format

use std::error::Error;

use chrono::Utc;
use docgate::demo::editoralert_feed;
use docgate::ingest::{
    parse_feed, parse_pivot_document, to_pivot_document, AdapterRegistry, ProviderConfig,
    TitleFilter,
};

pub fn run_example() -> Result<String, Box<dyn Error>> {
    let provider = ProviderConfig {
        id: "editoralert".into(),
        adapter: "editoralert".into(),
        title_filter: TitleFilter::AcceptAll,
    };
    let summaries = parse_feed(
        editoralert_feed().as_bytes(),
        &provider,
        &AdapterRegistry::default(),
        Utc::now(),
    )?;
    let mut out = String::new();
    for s in &summaries {
        let doc = to_pivot_document(s);
        let back = parse_pivot_document(&doc)?;
        assert_eq!(&back, s);
        out.push_str(&String::from_utf8(doc)?);
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?);
    Ok(())
}
