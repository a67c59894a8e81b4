use chrono::{NaiveDate, TimeZone, Utc};

use docgate::digest::format_digest;
use docgate::ingest::{ArticleRef, PivotSummary};

#[test]
fn one_summary_matches_golden() {
    let summary = PivotSummary {
        issn: "0000-0035".into(),
        journal_title: "Revue d'Histoire Moderne".into(),
        volume: 12,
        issue: 3,
        cover_date: NaiveDate::from_ymd_opt(2001, 9, 1).unwrap(),
        provider: "editoralert".into(),
        arrival: Utc.with_ymd_and_hms(2001, 10, 2, 9, 0, 0).unwrap(),
        articles: vec![
            ArticleRef {
                seq: 1,
                title: "Les postes royales au XVIIe siècle".into(),
                authors: vec!["Hélène Dürrenmatt".into()],
                first_page: 201,
                last_page: 224,
                abstract_text: Some("Cartographie des relais.".into()),
            },
            ArticleRef {
                seq: 2,
                title: "Imprimeurs lyonnais et censure".into(),
                authors: vec![],
                first_page: 225,
                last_page: 250,
                abstract_text: None,
            },
        ],
    };
    let got = format_digest(&[&summary]);
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/golden/digest_one_summary.txt"
    );
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(path, &got).unwrap();
    }
    assert_eq!(got, std::fs::read_to_string(path).unwrap());
}
