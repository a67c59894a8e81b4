//! Outgoing mail abstraction shared by alert digests and request notices.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::write_atomic;

#[derive(Debug, Error)]
#[error("mail sink unavailable: {0}")]
pub struct SinkUnavailable(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MailMessage {
    pub recipient: String,
    pub subject: String,
    pub body: String,
}

pub trait MailSink: Send + Sync {
    fn send(&self, message: &MailMessage) -> Result<(), SinkUnavailable>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SinkKind {
    #[default]
    Spool,
    Log,
}

/// Retains messages in memory. Can be switched to fail for recovery tests.
#[derive(Debug, Default)]
pub struct MemorySink {
    messages: Mutex<Vec<MailMessage>>,
    failing: AtomicBool,
}

impl MemorySink {
    pub fn set_failing(&self, failing: bool) {
        self.failing.store(failing, Ordering::SeqCst);
    }

    pub fn messages(&self) -> Vec<MailMessage> {
        self.messages.lock().expect("sink poisoned").clone()
    }
}

impl MailSink for MemorySink {
    fn send(&self, message: &MailMessage) -> Result<(), SinkUnavailable> {
        if self.failing.load(Ordering::SeqCst) {
            return Err(SinkUnavailable("memory sink switched off".into()));
        }
        self.messages
            .lock()
            .expect("sink poisoned")
            .push(message.clone());
        Ok(())
    }
}

/// Writes each message as a numbered file in a directory.
#[derive(Debug)]
pub struct SpoolSink {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl SpoolSink {
    pub fn new(dir: PathBuf) -> Self {
        SpoolSink {
            dir,
            lock: Mutex::new(()),
        }
    }
}

impl MailSink for SpoolSink {
    fn send(&self, message: &MailMessage) -> Result<(), SinkUnavailable> {
        let _guard = self.lock.lock().expect("spool poisoned");
        let fail = |e: std::io::Error| SinkUnavailable(format!("{}: {e}", self.dir.display()));
        std::fs::create_dir_all(&self.dir).map_err(fail)?;
        let next = std::fs::read_dir(&self.dir)
            .map_err(fail)?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                e.file_name()
                    .to_str()
                    .and_then(|n| n.strip_suffix(".msg"))
                    .and_then(|n| n.parse::<u64>().ok())
            })
            .max()
            .unwrap_or(0)
            + 1;
        let text = format!(
            "To: {}\nSubject: {}\n\n{}",
            message.recipient, message.subject, message.body
        );
        write_atomic(&self.dir.join(format!("{next:06}.msg")), text.as_bytes()).map_err(fail)
    }
}

#[derive(Debug, Default)]
pub struct LogSink;

impl MailSink for LogSink {
    fn send(&self, message: &MailMessage) -> Result<(), SinkUnavailable> {
        tracing::info!(recipient = %message.recipient, subject = %message.subject, "mail\n{}", message.body);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(n: u32) -> MailMessage {
        MailMessage {
            recipient: "a@example.org".into(),
            subject: format!("s{n}"),
            body: "b".into(),
        }
    }

    #[test]
    fn spool_numbers_messages() {
        let dir = tempfile::tempdir().unwrap();
        let sink = SpoolSink::new(dir.path().join("mail"));
        sink.send(&msg(1)).unwrap();
        sink.send(&msg(2)).unwrap();
        let second = std::fs::read_to_string(dir.path().join("mail/000002.msg")).unwrap();
        assert!(second.starts_with("To: a@example.org\nSubject: s2\n"));
    }

    #[test]
    fn memory_sink_failure_switch() {
        let sink = MemorySink::default();
        sink.set_failing(true);
        assert!(sink.send(&msg(1)).is_err());
        sink.set_failing(false);
        sink.send(&msg(1)).unwrap();
        assert_eq!(sink.messages().len(), 1);
    }
}
