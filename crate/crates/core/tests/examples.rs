macro_rules! example {
    ($name:ident) => {
        mod $name {
            #![allow(dead_code)]
            include!(concat!("../examples/", stringify!($name), ".rs"));
        }
    };
}

example!(alert_digest);
example!(delivery_table);
example!(document_cache);
example!(editor_binding);
example!(gateway_topology);
example!(ingest_feeds);
example!(paper_delivery);
example!(pivot_format);
example!(title_search);
example!(usage_stats);

#[test]
fn delivery_table_covers_every_mode() {
    let out = delivery_table::run_example().unwrap();
    for line in [
        "ElectronicToWorkstation  source=A",
        "PrintAtAuthorizedPrinter source=A billing=0.50",
        "DigitalizeThenPrint      source=B",
        "PhotocopyPostalMail      source=C",
        "Unavailable              source=-",
    ] {
        assert!(out.contains(line), "missing {line:?} in\n{out}");
    }
}

#[test]
fn pivot_format_round_trips() {
    let out = pivot_format::run_example().unwrap();
    assert!(out.contains("<author>Hélène Dürrenmatt</author>"));
}

#[test]
fn ingest_feeds_reprocesses_filtered_issues() {
    let out = ingest_feeds::run_example().unwrap();
    assert!(out.contains("narrow filter: parsed=2 stored=1 filtered=1"));
    assert!(out.contains("after widening: parsed=2 stored=1 duplicate=1"));
    assert!(out.contains("0000-0027/2001/7-2.pivot"));
}

#[test]
fn title_search_matches_accented_authors() {
    let out = title_search::run_example().unwrap();
    assert!(out.contains("0000-0035:v12:i3:a1 [1] Les postes royales"));
    assert!(out.contains("\"quasiperiodic\":\n\""));
}

#[test]
fn editor_binding_resolves_without_mutating() {
    let out = editor_binding::run_example().unwrap();
    assert!(out.contains("editor-y: /y/docs/0000-0027-7-2-2.pdf"));
    assert!(out.contains("editor-z: NoResolver"));
    assert!(out.contains("mutating: 0"));
}

#[test]
fn document_cache_downloads_once() {
    let out = document_cache::run_example().unwrap();
    assert!(out.contains("9 requests, 1 editor download"));
}

#[test]
fn paper_delivery_bills_each_job() {
    let out = paper_delivery::run_example().unwrap();
    assert!(out.contains("second completion: JobAlreadyCompleted"));
    assert!(out.contains("billing C -> D PhotocopyPostalMail 2.00"));
    assert_eq!(out.matches("copyright ").count(), 3);
}

#[test]
fn alert_digest_sends_once() {
    let out = alert_digest::run_example().unwrap();
    assert!(out.contains(": 2 message(s)"));
    assert!(out.contains(": 0 message(s)"));
}

#[test]
fn usage_stats_exports_counts() {
    let out = usage_stats::run_example().unwrap();
    assert!(out.starts_with("institution,issn,event_kind,count\n"));
    assert!(out.contains("D,0000-0035,RequestPlanned:PhotocopyPostalMail,1"));
}

#[test]
fn gateway_topology_completes_deferred_requests() {
    let out = gateway_topology::run_example().unwrap();
    assert!(out.contains("request 3 after B.print.1: Ready"));
    assert!(out.contains("request 4 after C.mail.1: Ready"));
}
