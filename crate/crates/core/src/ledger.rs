//! Append-only accounting ledger of billing and copyright records.

use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::fsutil::append_line;
use crate::policy::{BillingRecord, CopyrightPaymentRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LedgerEntry {
    Billing(BillingRecord),
    Copyright(CopyrightPaymentRecord),
}

#[derive(Debug, Default)]
pub struct Ledger {
    path: Option<PathBuf>,
    entries: Mutex<Vec<LedgerEntry>>,
}

impl Ledger {
    pub fn in_memory() -> Self {
        Ledger::default()
    }

    pub fn open(path: PathBuf) -> std::io::Result<Self> {
        let mut entries = Vec::new();
        if path.exists() {
            for line in std::fs::read_to_string(&path)?
                .lines()
                .filter(|l| !l.trim().is_empty())
            {
                entries.push(
                    serde_json::from_str(line)
                        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?,
                );
            }
        }
        Ok(Ledger {
            path: Some(path),
            entries: Mutex::new(entries),
        })
    }

    pub fn record(
        &self,
        billing: Option<BillingRecord>,
        copyright: Option<CopyrightPaymentRecord>,
    ) -> std::io::Result<()> {
        let mut entries = self.entries.lock().expect("ledger poisoned");
        let new: Vec<LedgerEntry> = billing
            .map(LedgerEntry::Billing)
            .into_iter()
            .chain(copyright.map(LedgerEntry::Copyright))
            .collect();
        if let Some(path) = &self.path {
            for e in &new {
                append_line(path, &serde_json::to_string(e).expect("entry serializes"))?;
            }
        }
        entries.extend(new);
        Ok(())
    }

    pub fn entries(&self) -> Vec<LedgerEntry> {
        self.entries.lock().expect("ledger poisoned").clone()
    }

    pub fn billing(&self) -> Vec<BillingRecord> {
        self.entries()
            .into_iter()
            .filter_map(|e| match e {
                LedgerEntry::Billing(b) => Some(b),
                _ => None,
            })
            .collect()
    }

    pub fn copyright(&self) -> Vec<CopyrightPaymentRecord> {
        self.entries()
            .into_iter()
            .filter_map(|e| match e {
                LedgerEntry::Copyright(c) => Some(c),
                _ => None,
            })
            .collect()
    }
}
