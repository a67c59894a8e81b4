use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use super::*;
use crate::binder::{BinderError, ResolveResult};
use crate::demo::{demo_settings, DemoPorts, J1, J2, J3};
use crate::ledger::LedgerEntry;
use crate::net::NetError;
use crate::policy::{plan_delivery, ServiceRights};

#[derive(Default)]
struct CountingBinder {
    calls: AtomicUsize,
}

#[async_trait]
impl BinderClient for CountingBinder {
    async fn resolve(&self, req: &ResolveRequest) -> Result<ResolveResult, BinderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        tokio::time::sleep(Duration::from_millis(20)).await;
        Ok(ResolveResult {
            url: Url::parse(&format!(
                "http://editor.test/{}/{}.pdf",
                req.issn, req.first_page
            ))
            .unwrap(),
            resolver: req.editor.clone(),
            elapsed_ms: 20,
        })
    }
}

struct StaticSite(Vec<u8>);

#[async_trait]
impl HttpFetch for StaticSite {
    async fn head(&self, _: &Url) -> Result<u16, NetError> {
        Ok(200)
    }
    async fn get(&self, _: &Url) -> Result<(u16, Vec<u8>), NetError> {
        Ok((200, self.0.clone()))
    }
}

struct Fixture {
    _dir: tempfile::TempDir,
    settings: Arc<Settings>,
    binder: Arc<CountingBinder>,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let settings = Arc::new(demo_settings(&DemoPorts::default(), dir.path()));
        Fixture {
            _dir: dir,
            settings,
            binder: Arc::new(CountingBinder::default()),
        }
    }

    fn server(&self, inst: &str, payload: &[u8]) -> DocumentServer {
        let id: InstitutionId = inst.into();
        DocumentServer::open(
            id.clone(),
            self.settings.clone(),
            self.settings.docserver_dir(&id),
            self.binder.clone(),
            Arc::new(StaticSite(payload.to_vec())),
        )
        .unwrap()
    }

    fn plan(&self, requester: &str, issn: &str) -> DeliveryPlan {
        let inst = self.settings.institution(&requester.into());
        plan_delivery(
            inst,
            &ServiceRights::all(),
            &issn.parse().unwrap(),
            &self.settings.consortium,
        )
        .unwrap()
    }
}

fn key(issn: &str) -> ArticleKey {
    format!("{issn}:v3:i1:a2").parse().unwrap()
}

fn meta() -> ArticleMeta {
    ArticleMeta {
        title: "Congestion games on rings".into(),
        first_page: 13,
        last_page: 30,
        editor: "editor-x".into(),
    }
}

#[tokio::test]
async fn miss_then_hit() {
    let f = Fixture::new();
    let a = f.server("A", b"%PDF");
    let first = a.fetch_or_cache(&key(J1), &meta()).await.unwrap();
    assert_eq!(f.binder.calls.load(Ordering::SeqCst), 1);
    let second = a.fetch_or_cache(&key(J1), &meta()).await.unwrap();
    assert_eq!(f.binder.calls.load(Ordering::SeqCst), 1);
    assert_eq!(first, second);
    assert_eq!(first.checksum, checksum(b"%PDF"));
    assert!(matches!(first.origin, DocumentOrigin::EditorFetch { .. }));
}

#[tokio::test]
async fn concurrent_misses_share_one_resolution() {
    let f = Fixture::new();
    let a = Arc::new(f.server("A", b"%PDF"));
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let a = a.clone();
            tokio::spawn(async move { a.fetch_or_cache(&key(J1), &meta()).await.unwrap() })
        })
        .collect();
    let mut docs = Vec::new();
    for t in tasks {
        docs.push(t.await.unwrap());
    }
    assert_eq!(f.binder.calls.load(Ordering::SeqCst), 1);
    assert!(docs.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn fetch_preconditions() {
    let f = Fixture::new();
    let b = f.server("B", b"%PDF");
    assert!(matches!(
        b.fetch_or_cache(&key(J1), &meta()).await,
        Err(DocError::NotSubscribed(_))
    ));
    let empty = f.server("A", b"");
    assert!(matches!(
        empty.fetch_or_cache(&key(J1), &meta()).await,
        Err(DocError::DownloadFailed(_))
    ));
    assert!(empty.lookup(&key(J1)).unwrap().is_none());
}

#[tokio::test]
async fn digitalization_rules() {
    let f = Fixture::new();
    let b = f.server("B", b"");
    let first = b.digitalize(&key(J2), b"scan-1").await.unwrap();
    assert_eq!(first.origin, DocumentOrigin::Digitalization);
    let again = b.digitalize(&key(J2), b"scan-2").await.unwrap();
    assert_eq!(again, first);
    assert_eq!(b.read(&key(J2)).unwrap().1, b"scan-1");
    let c = f.server("C", b"");
    assert!(matches!(
        c.digitalize(&key(J3), b"scan").await,
        Err(DocError::DigitalizationNotOffered(_))
    ));
    assert!(matches!(
        b.digitalize(&key(J1), b"scan").await,
        Err(DocError::NotSubscribed(_))
    ));
}

#[tokio::test]
async fn cross_institution_print_accounts_once() {
    let f = Fixture::new();
    let a = f.server("A", b"%PDF");
    let plan = f.plan("B", J1);
    assert_eq!(plan.mode, DeliveryMode::PrintAtAuthorizedPrinter);
    let doc = a.fetch_or_cache(&key(J1), &meta()).await.unwrap();
    let job = a.execute_print(&plan, &doc, 18).unwrap();
    assert_eq!(job.state, JobState::Done);
    assert!(job.completed.is_some());
    let spool = a
        .root()
        .join("spool/printers/B-P1")
        .join(format!("{}.bin", job.id));
    assert_eq!(std::fs::read(spool).unwrap(), b"%PDF");
    assert_eq!(a.ledger().billing().len(), 1);
    assert_eq!(a.ledger().copyright().len(), 1);

    let mut rogue = plan.clone();
    rogue.destination = Some(Destination::Printer("X-P9".into()));
    assert!(matches!(
        a.execute_print(&rogue, &doc, 18),
        Err(DocError::PrinterNotAuthorized(_))
    ));
    assert_eq!(a.ledger().entries().len(), 2);
}

#[tokio::test]
async fn digitalize_then_print_waits_for_scan() {
    let f = Fixture::new();
    let b = f.server("B", b"");
    let plan = f.plan("A", J2);
    assert_eq!(plan.mode, DeliveryMode::DigitalizeThenPrint);
    let req = PrintRequest {
        plan,
        article: key(J2),
        meta: meta(),
    };
    let job = b.submit_print(&req).await.unwrap();
    assert_eq!(job.state, JobState::Queued);
    assert!(b.ledger().entries().is_empty());
    b.digitalize(&key(J2), b"scan").await.unwrap();
    let done = b.get_job(&job.id).unwrap();
    assert_eq!(done.state, JobState::Done);
    assert_eq!(b.ledger().copyright().len(), 1);
    assert!(matches!(
        b.deliver_electronic(&key(J2), &meta()).await,
        Err(DocError::NotSubscribed(_))
    ));
}

#[tokio::test]
async fn photocopy_completion_is_single() {
    let f = Fixture::new();
    let c = f.server("C", b"");
    let plan = f.plan("D", J3);
    assert_eq!(plan.mode, DeliveryMode::PhotocopyPostalMail);
    let job = c.dispatch_photocopy(&plan, &key(J3), 24).unwrap();
    assert_eq!(job.state, JobState::Queued);
    assert_eq!(
        job.kind,
        JobKind::Mail {
            address: "Institute D, library desk".into()
        }
    );
    let done = c.complete_mail_job(&job.id).unwrap();
    assert_eq!(done.state, JobState::Done);
    assert!(matches!(
        c.complete_mail_job(&job.id),
        Err(DocError::JobAlreadyCompleted(_))
    ));
    let copyright = c.ledger().copyright();
    assert_eq!(copyright.len(), 1);
    assert_eq!(copyright[0].fee.to_string(), "2.40");
    assert!(c
        .root()
        .join("spool/mail")
        .join(format!("{}.txt", job.id))
        .exists());
    assert!(c
        .ledger()
        .entries()
        .iter()
        .all(|e| matches!(e, LedgerEntry::Billing(_) | LedgerEntry::Copyright(_))));
}

#[tokio::test]
async fn jobs_survive_restart() {
    let f = Fixture::new();
    let job = {
        let c = f.server("C", b"");
        c.dispatch_photocopy(&f.plan("D", J3), &key(J3), 5).unwrap()
    };
    let c = f.server("C", b"");
    assert_eq!(c.jobs(Some(JobState::Queued)), vec![job.clone()]);
    c.complete_mail_job(&job.id).unwrap();
    assert!(c.jobs(Some(JobState::Queued)).is_empty());
    assert_eq!(f.server("C", b"").ledger().copyright().len(), 1);
}
