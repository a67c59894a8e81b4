//! Batch orchestration over registered service modules.
//!
//! Every feed file is archived before any store mutation. Modules run in
//! stage order (Control, then Storage, then Alert); Storage only sees items
//! without validation errors and Alert only sees newly stored items.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::model::{Journal, SummaryKey};

use super::adapters::AdapterRegistry;
use super::pivot::PivotSummary;
use super::store::{IngestLock, RawArchive, SkipReason, StoreOutcome, SummaryStore};
use super::validate::{validate, ValidationReport};
use super::{parse_feed, IngestError, ProviderConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Control,
    Storage,
    Alert,
}

/// A summary travelling through the modules of one batch.
#[derive(Debug, Clone)]
pub struct BatchItem {
    pub summary: PivotSummary,
    pub report: ValidationReport,
    pub outcome: Option<StoreOutcome>,
    pub notified: bool,
}

pub struct PipelineEnv<'a> {
    pub journals: &'a [Journal],
    pub provider: &'a ProviderConfig,
    pub store: &'a SummaryStore,
}

pub trait ServiceModule: Send + Sync {
    fn process(&self, item: &mut BatchItem, env: &PipelineEnv<'_>) -> Result<(), IngestError>;
}

/// Coherence checks against the journal registry.
pub struct ValidateModule;

impl ServiceModule for ValidateModule {
    fn process(&self, item: &mut BatchItem, env: &PipelineEnv<'_>) -> Result<(), IngestError> {
        let report = validate(&item.summary, env.journals);
        item.report.findings.extend(report.findings);
        Ok(())
    }
}

/// Filtered, deduplicated storage into the summary hierarchy.
pub struct StoreModule;

impl ServiceModule for StoreModule {
    fn process(&self, item: &mut BatchItem, env: &PipelineEnv<'_>) -> Result<(), IngestError> {
        item.outcome = Some(env.store.store(&item.summary, env.provider)?);
        Ok(())
    }
}

/// Flags newly stored summaries for the alert digest.
pub struct AlertNotify;

impl ServiceModule for AlertNotify {
    fn process(&self, item: &mut BatchItem, _env: &PipelineEnv<'_>) -> Result<(), IngestError> {
        item.notified = true;
        Ok(())
    }
}

struct Registered {
    name: String,
    stage: Stage,
    module: Arc<dyn ServiceModule>,
}

#[derive(Clone)]
pub struct ServiceRegistry {
    modules: Vec<Arc<Registered>>,
}

impl Default for ServiceRegistry {
    fn default() -> Self {
        let mut r = ServiceRegistry::empty();
        r.register_module("validate", Stage::Control, Arc::new(ValidateModule))
            .expect("fresh registry");
        r.register_module("store", Stage::Storage, Arc::new(StoreModule))
            .expect("fresh registry");
        r.register_module("alert-notify", Stage::Alert, Arc::new(AlertNotify))
            .expect("fresh registry");
        r
    }
}

impl ServiceRegistry {
    pub fn empty() -> Self {
        ServiceRegistry {
            modules: Vec::new(),
        }
    }

    pub fn register_module(
        &mut self,
        name: &str,
        stage: Stage,
        module: Arc<dyn ServiceModule>,
    ) -> Result<(), IngestError> {
        if self.modules.iter().any(|m| m.name == name) {
            return Err(IngestError::DuplicateModuleName(name.to_string()));
        }
        self.modules.push(Arc::new(Registered {
            name: name.to_string(),
            stage,
            module,
        }));
        Ok(())
    }

    pub fn names(&self) -> Vec<(&str, Stage)> {
        self.modules
            .iter()
            .map(|m| (m.name.as_str(), m.stage))
            .collect()
    }

    fn stage(&self, stage: Stage) -> impl Iterator<Item = &Registered> {
        self.modules
            .iter()
            .filter(move |m| m.stage == stage)
            .map(|m| m.as_ref())
    }

    fn check(&self) -> Result<(), IngestError> {
        match self.stage(Stage::Storage).count() {
            1 => Ok(()),
            n => Err(IngestError::StorageModuleCount(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceEvent {
    Archived {
        file: String,
        path: PathBuf,
    },
    ParseFailed {
        file: String,
        error: String,
    },
    Parsed {
        file: String,
        summaries: usize,
    },
    Module {
        name: String,
        stage: Stage,
        summary: String,
    },
    Rejected {
        summary: String,
        codes: Vec<String>,
    },
    Stored {
        summary: String,
        path: PathBuf,
    },
    Skipped {
        summary: String,
        reason: SkipReason,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileOutcome {
    pub name: String,
    pub archived: Option<PathBuf>,
    pub summaries: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub parsed: usize,
    /// Items that entered each stage.
    pub entered: BTreeMap<Stage, usize>,
    pub rejected: usize,
    pub stored: usize,
    pub skipped_filtered: usize,
    pub skipped_duplicate: usize,
    pub notified: usize,
    pub failed_files: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchReport {
    pub files: Vec<FileOutcome>,
    pub counts: StageCounts,
    pub trace: Vec<TraceEvent>,
    pub newly_stored: Vec<SummaryKey>,
    pub findings: Vec<(String, ValidationReport)>,
}

/// Ingestion over one data directory (`store/`, `archive/`, `ingest.lock`).
#[derive(Clone)]
pub struct Pipeline {
    store: SummaryStore,
    archive: RawArchive,
    lock_path: PathBuf,
    adapters: AdapterRegistry,
    registry: ServiceRegistry,
}

impl Pipeline {
    pub fn new(data_dir: &Path) -> Self {
        Pipeline {
            store: SummaryStore::new(data_dir.join("store")),
            archive: RawArchive::new(data_dir.join("archive")),
            lock_path: data_dir.join("ingest.lock"),
            adapters: AdapterRegistry::default(),
            registry: ServiceRegistry::default(),
        }
    }

    pub fn with_registry(mut self, registry: ServiceRegistry) -> Self {
        self.registry = registry;
        self
    }

    pub fn registry_mut(&mut self) -> &mut ServiceRegistry {
        &mut self.registry
    }

    pub fn adapters(&self) -> &AdapterRegistry {
        &self.adapters
    }

    pub fn store(&self) -> &SummaryStore {
        &self.store
    }

    pub fn archive(&self) -> &RawArchive {
        &self.archive
    }

    pub fn lock(&self) -> Result<IngestLock, IngestError> {
        Ok(IngestLock::acquire(&self.lock_path)?)
    }

    /// Archives, parses and processes a batch of feed files from one provider.
    pub fn run_batch(
        &self,
        provider: &ProviderConfig,
        journals: &[Journal],
        files: &[(String, Vec<u8>)],
        received: DateTime<Utc>,
    ) -> Result<BatchReport, IngestError> {
        self.registry.check()?;
        if !self.adapters.contains(&provider.adapter) {
            return Err(IngestError::AdapterUnknown(provider.adapter.clone()));
        }
        let _guard = self.lock()?;
        let mut report = BatchReport::default();
        for (name, raw) in files {
            let path = self.archive.archive_raw(raw, &provider.id, received)?;
            report.trace.push(TraceEvent::Archived {
                file: name.clone(),
                path: path.clone(),
            });
            self.process_file(
                provider,
                journals,
                name,
                Some(path),
                raw,
                received,
                &mut report,
            )?;
        }
        Ok(report)
    }

    /// Replays every archived file of `provider` under a (possibly new)
    /// configuration. Stored keys are never touched; per-file parse errors
    /// are reported without aborting the replay.
    pub fn reprocess_archive(
        &self,
        provider: &ProviderConfig,
        journals: &[Journal],
    ) -> Result<BatchReport, IngestError> {
        self.registry.check()?;
        if !self.adapters.contains(&provider.adapter) {
            return Err(IngestError::AdapterUnknown(provider.adapter.clone()));
        }
        let _guard = self.lock()?;
        let mut report = BatchReport::default();
        for file in self.archive.list(&provider.id)? {
            let raw = std::fs::read(&file.path)?;
            let name = file.path.display().to_string();
            self.process_file(
                provider,
                journals,
                &name,
                Some(file.path.clone()),
                &raw,
                file.received,
                &mut report,
            )?;
        }
        Ok(report)
    }

    #[allow(clippy::too_many_arguments)]
    fn process_file(
        &self,
        provider: &ProviderConfig,
        journals: &[Journal],
        name: &str,
        archived: Option<PathBuf>,
        raw: &[u8],
        received: DateTime<Utc>,
        report: &mut BatchReport,
    ) -> Result<(), IngestError> {
        let summaries = match parse_feed(raw, provider, &self.adapters, received) {
            Ok(s) => s,
            Err(e @ (IngestError::MalformedFeed { .. } | IngestError::SchemaViolation { .. })) => {
                report.counts.failed_files += 1;
                report.trace.push(TraceEvent::ParseFailed {
                    file: name.to_string(),
                    error: e.to_string(),
                });
                report.files.push(FileOutcome {
                    name: name.to_string(),
                    archived,
                    summaries: 0,
                    error: Some(e.to_string()),
                });
                return Ok(());
            }
            Err(e) => return Err(e),
        };
        report.trace.push(TraceEvent::Parsed {
            file: name.to_string(),
            summaries: summaries.len(),
        });
        report.files.push(FileOutcome {
            name: name.to_string(),
            archived,
            summaries: summaries.len(),
            error: None,
        });
        let env = PipelineEnv {
            journals,
            provider,
            store: &self.store,
        };
        for summary in summaries {
            report.counts.parsed += 1;
            let label = summary_label(&summary);
            let mut item = BatchItem {
                summary,
                report: ValidationReport::default(),
                outcome: None,
                notified: false,
            };
            self.run_stage(Stage::Control, &mut item, &env, &label, report)?;
            if item.report.has_errors() {
                report.counts.rejected += 1;
                report.trace.push(TraceEvent::Rejected {
                    summary: label.clone(),
                    codes: item.report.codes().into_iter().map(String::from).collect(),
                });
                report.findings.push((label, item.report));
                continue;
            }
            self.run_stage(Stage::Storage, &mut item, &env, &label, report)?;
            match item.outcome.clone() {
                Some(StoreOutcome::Stored(path)) => {
                    report.counts.stored += 1;
                    report.trace.push(TraceEvent::Stored {
                        summary: label.clone(),
                        path,
                    });
                    if let Ok(key) = item.summary.key() {
                        report.newly_stored.push(key);
                    }
                    self.run_stage(Stage::Alert, &mut item, &env, &label, report)?;
                    if item.notified {
                        report.counts.notified += 1;
                    }
                }
                Some(StoreOutcome::Skipped(reason)) => {
                    match reason {
                        SkipReason::Filtered => report.counts.skipped_filtered += 1,
                        SkipReason::Duplicate => report.counts.skipped_duplicate += 1,
                    }
                    report.trace.push(TraceEvent::Skipped {
                        summary: label.clone(),
                        reason,
                    });
                }
                None => {}
            }
            if !item.report.is_empty() {
                report.findings.push((label, item.report));
            }
        }
        Ok(())
    }

    fn run_stage(
        &self,
        stage: Stage,
        item: &mut BatchItem,
        env: &PipelineEnv<'_>,
        label: &str,
        report: &mut BatchReport,
    ) -> Result<(), IngestError> {
        *report.counts.entered.entry(stage).or_default() += 1;
        for m in self.registry.stage(stage) {
            m.module.process(item, env)?;
            report.trace.push(TraceEvent::Module {
                name: m.name.clone(),
                stage,
                summary: label.to_string(),
            });
        }
        Ok(())
    }
}

fn summary_label(s: &PivotSummary) -> String {
    format!("{}:v{}:i{}", s.issn, s.volume, s.issue)
}
