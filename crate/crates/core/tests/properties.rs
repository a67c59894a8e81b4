use std::collections::{BTreeMap, BTreeSet};
use std::net::{IpAddr, Ipv4Addr};

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use proptest::prelude::*;

use docgate::digest::{run_digest, AlertSubscription, DigestState};
use docgate::ingest::{ArticleRef, PivotSummary, TraceEvent};
use docgate::mail::MemorySink;
use docgate::model::{ArticleKey, Domain, Issn, Journal};
use docgate::policy::{
    emit_records, plan_delivery, resolve_institution, Consortium, DeliveryFormat, DeliveryMode,
    FeeSchedule, Institution, ServiceRights, Subscription, SubscriptionFormat,
};
use docgate::search::{tokenize, SearchIndex};

const ISSNS: [&str; 3] = ["0000-0019", "0000-0027", "0000-0035"];

fn rights() -> impl Strategy<Value = ServiceRights> {
    (any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(a, p, d, e)| {
        ServiceRights {
            navigation_browsing: true,
            alert_service: a,
            photocopy_service: p,
            digitalization: d,
            electronic_access: e,
        }
    })
}

prop_compose! {
    fn consortium()(n in 1usize..6,
                    digitalize in proptest::collection::vec(any::<bool>(), 6),
                    printers in proptest::collection::vec(0usize..3, 6),
                    subs in proptest::collection::btree_set((0usize..6, 0usize..3, any::<bool>()), 0..14))
                    -> Consortium {
        let institutions = (0..n)
            .map(|i| Institution {
                id: format!("I{i}").as_str().into(),
                name: format!("Institute {i}"),
                ip_ranges: vec![format!("10.{i}.0.0/16").parse().unwrap()],
                can_digitalize: digitalize[i],
                authorized_printers: (0..printers[i]).map(|p| format!("I{i}-P{p}")).collect(),
                postal_address: format!("desk {i}"),
                document_server: None,
                rights_by_category: BTreeMap::new(),
            })
            .collect();
        let journals = ISSNS
            .iter()
            .map(|s| Journal {
                issn: s.parse().unwrap(),
                code: None,
                title: s.to_string(),
                domains: vec![Domain::HumanSciences],
                editor: "editor-x".into(),
            })
            .collect();
        let subscriptions = subs
            .into_iter()
            .filter(|(i, _, _)| *i < n)
            .map(|(i, j, electronic)| Subscription {
                institution: format!("I{i}").as_str().into(),
                issn: ISSNS[j].parse().unwrap(),
                format: if electronic { SubscriptionFormat::Electronic } else { SubscriptionFormat::Paper },
            })
            .collect();
        Consortium::new(institutions, journals, subscriptions).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn plans_satisfy_invariants(c in consortium(), who in 0usize..7, j in 0usize..4, r in rights()) {
        let requester = c.institutions.get(who);
        let issn: Issn = ISSNS.get(j).copied().unwrap_or("0000-0043").parse().unwrap();
        let first = plan_delivery(requester, &r, &issn, &c);
        prop_assert_eq!(&first, &plan_delivery(requester, &r, &issn, &c));
        let Ok(plan) = first else { return Ok(()) };
        prop_assert!(plan.check_invariants().is_ok(), "{:?}", plan.check_invariants());
        if let (Some(src), Some(req)) = (&plan.source_institution, requester) {
            if src != &req.id {
                prop_assert_eq!(plan.delivery_format, Some(DeliveryFormat::Paper));
            }
        }
        if plan.mode == DeliveryMode::DigitalizeThenPrint {
            let src = c.institution(plan.source_institution.as_ref().unwrap()).unwrap();
            prop_assert!(src.can_digitalize);
        }
        if plan.mode != DeliveryMode::Unavailable {
            let src = plan.source_institution.as_ref().unwrap();
            let held = c.subscribes(src, &issn, SubscriptionFormat::Electronic)
                || c.subscribes(src, &issn, SubscriptionFormat::Paper);
            prop_assert!(held, "source {} holds nothing", src);
        }
    }

    #[test]
    fn one_copyright_record_per_paper_delivery(c in consortium(), who in 0usize..6, j in 0usize..3, r in rights(), pages in 1u32..80) {
        let Some(req) = c.institutions.get(who) else { return Ok(()) };
        let issn: Issn = ISSNS[j].parse().unwrap();
        let Ok(plan) = plan_delivery(Some(req), &r, &issn, &c) else { return Ok(()) };
        if plan.mode == DeliveryMode::Unavailable {
            return Ok(());
        }
        let fees = FeeSchedule { copyright_per_page: "0.10".parse().unwrap(), print: "0.5".parse().unwrap(), ..FeeSchedule::default() };
        let article = ArticleKey { issn: issn.clone(), volume: 1, issue: 1, seq: 1 };
        let (billing, copyright) = emit_records(&plan, req, &article, pages, &fees, Utc::now());
        let paper = plan.delivery_format == Some(DeliveryFormat::Paper);
        prop_assert_eq!(copyright.is_some(), paper);
        prop_assert_eq!(billing.is_some(), plan.source_institution.as_ref() != Some(&req.id));
        if let Some(cr) = copyright {
            prop_assert_eq!(cr.fee, fees.copyright_per_page * rust_decimal::Decimal::from(pages));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn resolution_agrees_with_linear_scan(c in consortium(), b in 0u8..8, x in any::<u8>(), y in any::<u8>()) {
        let addr = IpAddr::V4(Ipv4Addr::new(10, b, x, y));
        let scan = c.institutions.iter().find(|i| i.ip_ranges.iter().any(|r| r.contains(&addr)));
        prop_assert_eq!(resolve_institution(addr, &c.institutions).map(|i| &i.id), scan.map(|i| &i.id));
    }
}

const WORDS: [&str; 12] = [
    "graph", "routing", "Smith", "okafor", "logic", "modal", "postes", "Hélène", "rings",
    "deadline", "proof", "xvii",
];

prop_compose! {
    fn article(seq: u32)(title in proptest::collection::vec(0usize..12, 1..5),
                         authors in proptest::collection::vec(0usize..12, 0..3),
                         abstract_words in proptest::collection::vec(0usize..12, 0..4))
                         -> ArticleRef {
        ArticleRef {
            seq,
            title: title.iter().map(|w| WORDS[*w]).collect::<Vec<_>>().join(" "),
            authors: authors.iter().map(|w| format!("A. {}", WORDS[*w])).collect(),
            first_page: seq,
            last_page: seq + 3,
            abstract_text: (!abstract_words.is_empty())
                .then(|| format!("zeta {}", abstract_words.iter().map(|w| WORDS[*w]).collect::<Vec<_>>().join(" "))),
        }
    }
}

fn corpus() -> impl Strategy<Value = Vec<PivotSummary>> {
    proptest::collection::vec(
        (0usize..3, 1u32..20, (article(1), article(2), article(3))),
        1..5,
    )
    .prop_map(|issues| {
        issues
            .into_iter()
            .map(|(j, volume, (a, b, c))| PivotSummary {
                issn: ISSNS[j].into(),
                journal_title: format!("Journal {}", WORDS[j]),
                volume,
                issue: 1,
                cover_date: NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(),
                provider: "p".into(),
                arrival: Utc.with_ymd_and_hms(2001, 2, 1, 0, 0, 0).unwrap(),
                articles: vec![a, b, c],
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn search_equals_brute_force(summaries in corpus(), q in proptest::collection::vec(0usize..13, 0..3)) {
        let query = q.iter().map(|w| WORDS.get(*w).copied().unwrap_or("zeta")).collect::<Vec<_>>().join(" ");
        let terms: BTreeSet<String> = tokenize(&query).collect();
        let index = SearchIndex::build(&summaries);
        let got: BTreeSet<ArticleKey> = index.search(&query).into_iter().map(|h| h.article).collect();
        let mut want = BTreeSet::new();
        for s in &summaries {
            for a in &s.articles {
                let mut fields: BTreeSet<String> = tokenize(&a.title).chain(tokenize(&s.journal_title)).collect();
                for au in &a.authors {
                    fields.extend(tokenize(au));
                }
                if !terms.is_empty() && terms.is_subset(&fields) {
                    want.insert(s.key().unwrap().article(a.seq));
                }
            }
        }
        prop_assert_eq!(got, want);
    }
}

fn summary_at(issn: &str, volume: u32, arrival: DateTime<Utc>) -> PivotSummary {
    PivotSummary {
        issn: issn.into(),
        journal_title: issn.into(),
        volume,
        issue: 1,
        cover_date: NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(),
        provider: "p".into(),
        arrival,
        articles: vec![ArticleRef {
            seq: 1,
            title: "t".into(),
            authors: vec![],
            first_page: 1,
            last_page: 2,
            abstract_text: None,
        }],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn digest_windows_are_contiguous_and_exactly_once(
        steps in proptest::collection::vec((proptest::collection::vec((0usize..3, 1i64..300), 0..4), 1i64..300, any::<bool>()), 1..12)
    ) {
        let t0 = Utc.with_ymd_and_hms(2001, 10, 1, 0, 0, 0).unwrap();
        let subs: Vec<AlertSubscription> = (0..2)
            .map(|n| AlertSubscription {
                id: n,
                email: format!("r{n}@x.org"),
                issns: ISSNS[n as usize..].iter().map(|s| s.parse().unwrap()).collect(),
                created: t0,
                active: true,
            })
            .collect();
        let sink = MemorySink::default();
        let mut state = DigestState::bootstrap(t0);
        let (mut clock, mut summaries, mut delivered) = (t0, Vec::new(), BTreeSet::new());
        let mut volume = 0;
        for (arrivals, wait, failing) in steps {
            for (j, dt) in arrivals {
                volume += 1;
                summaries.push(summary_at(ISSNS[j], volume, clock + Duration::minutes(dt)));
            }
            clock += Duration::minutes(wait);
            sink.set_failing(failing);
            let before = state.watermark;
            match run_digest(clock, &mut state, &summaries, &subs, &sink) {
                Ok(run) => {
                    prop_assert_eq!(run.window_start, before);
                    prop_assert_eq!(state.watermark, clock);
                    for m in run.messages {
                        for k in m.summaries {
                            prop_assert!(delivered.insert((m.email.clone(), k.clone())), "{} got {} twice", m.email, k);
                        }
                    }
                }
                Err(_) => prop_assert_eq!(state.watermark, before),
            }
        }
        for s in summaries.iter().filter(|s| s.arrival <= state.watermark) {
            for sub in &subs {
                let key = s.key().unwrap();
                if sub.issns.contains(&key.issn) {
                    prop_assert!(delivered.contains(&(sub.email.clone(), key)));
                }
            }
        }
    }
}

#[test]
fn every_file_is_archived_before_its_summaries_are_stored() {
    let dir = tempfile::tempdir().unwrap();
    let settings = docgate::demo::demo_settings(&docgate::demo::DemoPorts::default(), dir.path());
    let pipeline = docgate::ingest::Pipeline::new(&settings.data_dir);
    let report = pipeline
        .run_batch(
            settings.provider("swetslike").unwrap(),
            &settings.consortium.journals,
            &[
                ("one".into(), docgate::demo::batch1_tsv().into_bytes()),
                ("two".into(), b"not a feed".to_vec()),
            ],
            Utc::now(),
        )
        .unwrap();
    let mut archived = BTreeSet::new();
    for event in &report.trace {
        match event {
            TraceEvent::Archived { file, path } => {
                assert!(path.exists());
                archived.insert(file.clone());
            }
            TraceEvent::Parsed { file, .. } | TraceEvent::ParseFailed { file, .. } => {
                assert!(archived.contains(file), "{file} processed before archiving")
            }
            TraceEvent::Stored { .. } => assert!(archived.contains("one")),
            _ => {}
        }
    }
    assert_eq!(report.counts.stored, 2);
    assert_eq!(report.counts.failed_files, 1);
}
