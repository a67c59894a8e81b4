use serde::{Deserialize, Serialize};

use crate::model::{Issn, Journal};

use super::pivot::PivotSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn codes(&self) -> Vec<&str> {
        self.findings.iter().map(|f| f.code.as_str()).collect()
    }

    fn push(&mut self, severity: Severity, code: &str, message: String) {
        self.findings.push(Finding {
            severity,
            code: code.to_string(),
            message,
        });
    }
}

/// Checks a summary against the journal registry. Only the journal identity
/// is cross-checked; article titles and author names are taken as delivered.
pub fn validate(s: &PivotSummary, journals: &[Journal]) -> ValidationReport {
    let mut report = ValidationReport::default();
    match Issn::parse(&s.issn) {
        Err(_) if Issn::is_well_formed(&s.issn) => report.push(
            Severity::Error,
            "bad-check-digit",
            format!("ISSN {} has an invalid check character", s.issn),
        ),
        Err(_) => report.push(
            Severity::Error,
            "bad-issn-format",
            format!("`{}` is not a formatted ISSN", s.issn),
        ),
        Ok(issn) => match journals.iter().find(|j| j.issn == issn) {
            None => report.push(
                Severity::Error,
                "unknown-issn",
                format!("ISSN {issn} is not registered"),
            ),
            Some(j) if !j.title.to_lowercase().eq(&s.journal_title.to_lowercase()) => report.push(
                Severity::Error,
                "title-mismatch",
                format!(
                    "journal title `{}` differs from registered `{}`",
                    s.journal_title, j.title
                ),
            ),
            Some(_) => {}
        },
    }
    for a in &s.articles {
        if a.abstract_text
            .as_deref()
            .map_or(true, |t| t.trim().is_empty())
        {
            report.push(
                Severity::Warning,
                "missing-abstract",
                format!("article {} has no abstract", a.seq),
            );
        }
        if a.authors.is_empty() {
            report.push(
                Severity::Warning,
                "no-authors",
                format!("article {} lists no author", a.seq),
            );
        }
    }
    report
}
