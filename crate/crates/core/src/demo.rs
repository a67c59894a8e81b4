//! The four-institution demo consortium.
//!
//! | institution | network | digitalizes | holdings |
//! |---|---|---|---|
//! | A | 10.1.0.0/16 | no | J1 electronic |
//! | B | 10.2.0.0/16 | yes | J2 paper |
//! | C | 10.3.0.0/16 | no | J3 paper |
//! | D | 10.4.0.0/16 | no | none, no document server |
//!
//! J9 is known to the registry but held by nobody. Editor `editor-x`
//! publishes J1 and J9 under a URL template, `editor-y` publishes J2 and J3
//! behind per-issue listing pages.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};

use crate::binder::EditorConfig;
use crate::config::{GatewayConfig, MailConfig, ServerConfig, Settings};
use crate::fsutil::write_atomic;
use crate::ingest::{BatchReport, IngestError, Pipeline, ProviderConfig, TitleFilter};
use crate::mail::SinkKind;
use crate::model::{Domain, Journal};
use crate::policy::{FeeSchedule, Institution, ServiceRights, Subscription, SubscriptionFormat};

pub const J1: &str = "0000-0019";
pub const J2: &str = "0000-0027";
pub const J3: &str = "0000-0035";
pub const J9: &str = "0000-0094";

pub const ADMIN_TOKEN: &str = "demo-admin";

/// TCP ports of every service in the demo topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DemoPorts {
    pub summary: u16,
    pub docservers: [u16; 3],
    pub binder: u16,
    pub editors: u16,
}

impl DemoPorts {
    pub fn from_base(base: u16) -> Self {
        DemoPorts {
            summary: base,
            docservers: [base + 1, base + 2, base + 3],
            binder: base + 10,
            editors: base + 20,
        }
    }
}

impl Default for DemoPorts {
    fn default() -> Self {
        DemoPorts::from_base(7400)
    }
}

fn local(port: u16) -> url::Url {
    url::Url::parse(&format!("http://127.0.0.1:{port}/")).expect("loopback URL")
}

fn journal(issn: &str, code: &str, title: &str, domains: &[Domain], editor: &str) -> Journal {
    Journal {
        issn: issn.parse().expect("demo ISSN"),
        code: Some(code.into()),
        title: title.into(),
        domains: domains.to_vec(),
        editor: editor.into(),
    }
}

fn institution(
    id: &str,
    net: &str,
    can_digitalize: bool,
    printers: &[&str],
    server: Option<u16>,
) -> Institution {
    let student = ServiceRights {
        alert_service: true,
        ..ServiceRights::navigation_only()
    };
    Institution {
        id: id.into(),
        name: format!("Institute {id}"),
        ip_ranges: vec![net.parse().expect("demo network")],
        can_digitalize,
        authorized_printers: printers.iter().map(|p| p.to_string()).collect(),
        postal_address: format!("Institute {id}, library desk"),
        document_server: server.map(local),
        rights_by_category: BTreeMap::from([
            ("researcher".to_string(), ServiceRights::all()),
            ("student".to_string(), student),
        ]),
    }
}

fn subscription(inst: &str, issn: &str, format: SubscriptionFormat) -> Subscription {
    Subscription {
        institution: inst.into(),
        issn: issn.parse().expect("demo ISSN"),
        format,
    }
}

pub fn demo_config(ports: &DemoPorts) -> GatewayConfig {
    use Domain::{ExactSciences, HumanSciences};
    let editors = local(ports.editors);
    GatewayConfig {
        server: ServerConfig {
            admin_token: ADMIN_TOKEN.into(),
            summary_server: local(ports.summary),
            binder: local(ports.binder),
            installed_at: Some(
                DateTime::parse_from_rfc3339("2001-10-01T00:00:00Z")
                    .expect("fixed instant")
                    .into(),
            ),
            ..ServerConfig::default()
        },
        fees: FeeSchedule {
            print: "0.50".parse().expect("decimal"),
            digitalize_print: "1.50".parse().expect("decimal"),
            photocopy: "2.00".parse().expect("decimal"),
            copyright_per_page: "0.10".parse().expect("decimal"),
            ..FeeSchedule::default()
        },
        mail: MailConfig {
            sink: SinkKind::Spool,
        },
        journals: vec![
            journal(
                J1,
                "J1",
                "Journal of Networks",
                &[ExactSciences],
                "editor-x",
            ),
            journal(
                J2,
                "J2",
                "Annals of Applied Logic",
                &[ExactSciences, HumanSciences],
                "editor-y",
            ),
            journal(
                J3,
                "J3",
                "Revue d'Histoire Moderne",
                &[HumanSciences],
                "editor-y",
            ),
            journal(
                J9,
                "J9",
                "Cahiers de Linguistique",
                &[HumanSciences],
                "editor-x",
            ),
        ],
        institutions: vec![
            institution(
                "A",
                "10.1.0.0/16",
                false,
                &["A-P1"],
                Some(ports.docservers[0]),
            ),
            institution(
                "B",
                "10.2.0.0/16",
                true,
                &["B-P1", "B-P2"],
                Some(ports.docservers[1]),
            ),
            institution(
                "C",
                "10.3.0.0/16",
                false,
                &["C-P1"],
                Some(ports.docservers[2]),
            ),
            institution("D", "10.4.0.0/16", false, &["D-P1"], None),
        ],
        subscriptions: vec![
            subscription("A", J1, SubscriptionFormat::Electronic),
            subscription("B", J2, SubscriptionFormat::Paper),
            subscription("C", J3, SubscriptionFormat::Paper),
        ],
        providers: vec![
            ProviderConfig {
                id: "swetslike".into(),
                adapter: "swetslike".into(),
                title_filter: TitleFilter::AcceptAll,
            },
            ProviderConfig {
                id: "editoralert".into(),
                adapter: "editoralert".into(),
                title_filter: TitleFilter::AcceptAll,
            },
        ],
        editors: vec![
            EditorConfig::Template {
                id: "editor-x".into(),
                template: format!("{editors}x/{{issn}}/{{volume}}/{{first_page}}.pdf"),
            },
            EditorConfig::Listing {
                id: "editor-y".into(),
                listing: format!("{editors}y/{{issn}}/{{volume}}-{{issue}}.html"),
            },
        ],
    }
}

/// Demo settings rooted at `data_dir`.
pub fn demo_settings(ports: &DemoPorts, data_dir: &Path) -> Settings {
    let mut cfg = demo_config(ports);
    cfg.server.data_dir = data_dir.to_path_buf();
    cfg.into_settings(data_dir)
        .expect("demo configuration is consistent")
}

/// (issn, journal, volume, issue, date, seq, title, authors, first, last, abstract)
type Row = (
    &'static str,
    &'static str,
    u32,
    u32,
    &'static str,
    u32,
    &'static str,
    &'static str,
    u32,
    u32,
    &'static str,
);

const BATCH1: &[Row] = &[
    (
        J1,
        "Journal of Networks",
        3,
        1,
        "2001-09-15",
        1,
        "Routing in sparse graphs",
        "J. Smith; K. Okafor",
        1,
        12,
        "We bound stretch using quasiperiodic spanners.",
    ),
    (
        J1,
        "Journal of Networks",
        3,
        1,
        "2001-09-15",
        2,
        "Congestion games on rings",
        "L. Moreau",
        13,
        30,
        "Equilibria are computed through lexicographic potentials.",
    ),
    (
        J1,
        "Journal of Networks",
        3,
        1,
        "2001-09-15",
        3,
        "Packet scheduling with deadlines",
        "A. Rossi; J. Smith",
        31,
        44,
        "",
    ),
    (
        J2,
        "Annals of Applied Logic",
        7,
        2,
        "2001-06-01",
        1,
        "Modal fixpoints in verification",
        "P. Dubois",
        101,
        118,
        "Bisimulation invariance follows from ultrafilter extensions.",
    ),
    (
        J2,
        "Annals of Applied Logic",
        7,
        2,
        "2001-06-01",
        2,
        "Proof search for linear logic",
        "M. Kowalski; S. Ito",
        119,
        140,
        "Focusing reduces nondeterminism in sequent derivations.",
    ),
];

/// Swets-style tab-separated batch: two issues, five articles.
pub fn batch1_tsv() -> String {
    let mut out = String::from(
        "# ISSN\tJOURNAL\tVOL\tISSUE\tDATE\tSEQ\tTITLE\tAUTHORS\tFIRST\tLAST\tABSTRACT\n",
    );
    for r in BATCH1 {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.0, r.1, r.2, r.3, r.4, r.5, r.6, r.7, r.8, r.9, r.10
        ));
    }
    out
}

/// Editor alert feed: J3 volume 12 issue 3 and J9 volume 1 issue 1.
pub fn editoralert_feed() -> String {
    format!(
        "IS
SN {J3}
JT Revue d'Histoire Moderne
VO 12
NO 3
DA 2001-09-01
AR
TI Les postes royales au XVIIe siècle
AU Hélène Dürrenmatt
PG 201-224
AB Cartographie des relais et des tarifs postaux.
AR
TI Imprimeurs lyonnais et censure
AU François Bérard
AU C. Weiss
PG 225-250
ER
IS
SN {J9}
JT Cahiers de Linguistique
VO 1
NO 1
DA 2001-09-20
AR
TI Phonologie des langues romanes
AU Núria Ferrer
PG 1-19
AB Harmonie vocalique et métaphonie.
ER
"
    )
}

/// Bytes served by the mock editor for one article.
pub fn article_pdf(issn: &str, volume: u32, first_page: u32) -> Vec<u8> {
    format!("%PDF-1.4\n% {issn} volume {volume} page {first_page}\n%%EOF\n").into_bytes()
}

/// Writes the mock editor web sites under `root` (`x/...` and `y/...`).
pub fn write_editor_sites(root: &Path) -> std::io::Result<()> {
    let x_articles: &[(&str, u32, u32)] = &[(J1, 3, 1), (J1, 3, 13), (J1, 3, 31), (J9, 1, 1)];
    for (issn, volume, first) in x_articles {
        let path = root
            .join("x")
            .join(issn)
            .join(volume.to_string())
            .join(format!("{first}.pdf"));
        write_atomic(&path, &article_pdf(issn, *volume, *first))?;
    }
    let y_issues: &[(&str, u32, u32, &[(&str, u32)])] = &[
        (
            J2,
            7,
            2,
            &[
                ("Modal fixpoints in verification", 101),
                ("Proof search for linear logic", 119),
            ],
        ),
        (
            J3,
            12,
            3,
            &[
                ("Les postes royales au XVIIe siècle", 201),
                ("Imprimeurs lyonnais et censure", 225),
            ],
        ),
    ];
    for (issn, volume, issue, articles) in y_issues {
        let mut html = format!("<html><body><h1>{issn} {volume}({issue})</h1><ul>\n");
        for (n, (title, first)) in articles.iter().enumerate() {
            let doc = format!("docs/{issn}-{volume}-{issue}-{}.pdf", n + 1);
            html.push_str(&format!("<li><a href=\"/y/{doc}\">{title}</a></li>\n"));
            write_atomic(
                &root.join("y").join(&doc),
                &article_pdf(issn, *volume, *first),
            )?;
        }
        html.push_str("</ul></body></html>\n");
        write_atomic(
            &root
                .join("y")
                .join(issn)
                .join(format!("{volume}-{issue}.html")),
            html.as_bytes(),
        )?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct SeedReport {
    pub config_path: PathBuf,
    pub batch1: PathBuf,
    pub editoralert: PathBuf,
    pub editor_sites: PathBuf,
    pub ingest: BatchReport,
}

#[derive(Debug, thiserror::Error)]
pub enum SeedError {
    #[error("cannot write demo files: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Lays out a ready-to-serve demo in `dir`: `docgate.toml`, `fixtures/`,
/// `editors/` and a data directory with the editor alert feed ingested.
/// `fixtures/batch1.tsv` is left for the operator to ingest.
pub fn seed(dir: &Path, ports: &DemoPorts) -> Result<SeedReport, SeedError> {
    let mut cfg = demo_config(ports);
    cfg.server.installed_at = Some(Utc::now() - Duration::days(1));
    let config_path = dir.join("docgate.toml");
    write_atomic(&config_path, cfg.to_toml().as_bytes())?;
    let batch1 = dir.join("fixtures").join("batch1.tsv");
    write_atomic(&batch1, batch1_tsv().as_bytes())?;
    let editoralert = dir.join("fixtures").join("editoralert.txt");
    write_atomic(&editoralert, editoralert_feed().as_bytes())?;
    let editor_sites = dir.join("editors");
    write_editor_sites(&editor_sites)?;

    let settings = cfg
        .into_settings(dir)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
    let pipeline = Pipeline::new(&settings.data_dir);
    let provider = settings
        .provider("editoralert")
        .expect("demo provider")
        .clone();
    let ingest = pipeline.run_batch(
        &provider,
        &settings.consortium.journals,
        &[(
            "editoralert.txt".to_string(),
            editoralert_feed().into_bytes(),
        )],
        Utc::now(),
    )?;
    Ok(SeedReport {
        config_path,
        batch1,
        editoralert,
        editor_sites,
        ingest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_feed, AdapterRegistry};

    #[test]
    fn config_is_consistent_and_round_trips() {
        let cfg = demo_config(&DemoPorts::default());
        let again = GatewayConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        let s = cfg.into_settings(Path::new("/tmp")).unwrap();
        assert_eq!(s.consortium.institutions.len(), 4);
        assert_eq!(
            s.resolve_ip("10.4.0.9".parse().unwrap())
                .unwrap()
                .id
                .as_str(),
            "D"
        );
    }

    #[test]
    fn feeds_parse() {
        let reg = AdapterRegistry::default();
        let cfg = demo_config(&DemoPorts::default());
        let t = Utc::now();
        let b = parse_feed(batch1_tsv().as_bytes(), &cfg.providers[0], &reg, t).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.iter().map(|s| s.articles.len()).sum::<usize>(), 5);
        let e = parse_feed(editoralert_feed().as_bytes(), &cfg.providers[1], &reg, t).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(
            e[0].articles[0].authors,
            vec!["Hélène Dürrenmatt".to_string()]
        );
    }
}
