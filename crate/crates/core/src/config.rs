//! Consortium configuration file (TOML).
//!
//! ```toml
//! [server]
//! data_dir = "data"                      # relative to this file
//! admin_token = "secret"
//! summary_server = "http://127.0.0.1:7400/"
//! binder = "http://127.0.0.1:7410/"
//! trusted_proxies = ["127.0.0.1"]
//! proxy_header = "x-forwarded-for"
//! installed_at = "2001-10-01T00:00:00Z"  # first digest watermark
//!
//! [fees]                                 # decimal strings, default "0"
//! print = "0.50"
//! copyright_per_page = "0.10"
//!
//! [mail]
//! sink = "spool"                         # or "log"
//!
//! [[journals]]
//! issn = "0000-0019"
//! code = "J1"
//! title = "Journal of Networks"
//! domains = ["exact-sciences"]
//! editor = "editor-x"
//!
//! [[institutions]]
//! id = "A"
//! name = "Institute A"
//! ip_ranges = ["10.1.0.0/16"]
//! can_digitalize = false
//! authorized_printers = ["A-P1"]
//! postal_address = "A, mail room"
//! document_server = "http://127.0.0.1:7401/"
//! [institutions.rights.researcher]
//! navigation_browsing = true
//! electronic_access = true
//!
//! [[subscriptions]]
//! institution = "A"
//! issn = "0000-0019"
//! format = "Electronic"
//!
//! [[providers]]
//! id = "swets"
//! adapter = "swetslike"
//! title_filter = "accept-all"            # or a list of ISSNs
//!
//! [[editors]]
//! resolver = "template"
//! id = "editor-x"
//! template = "http://127.0.0.1:7420/x/{issn}/{volume}/{first_page}.pdf"
//! ```

use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::binder::EditorConfig;
use crate::ingest::{AdapterRegistry, ProviderConfig};
use crate::mail::SinkKind;
use crate::model::{InstitutionId, Journal, ProviderId};
use crate::policy::{
    Consortium, ConsortiumError, FeeSchedule, Institution, InstitutionIndex, Subscription,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("inconsistent consortium: {0}")]
    Consortium(#[from] ConsortiumError),
    #[error("provider `{0}` uses unregistered adapter `{1}`")]
    UnknownAdapter(ProviderId, String),
    #[error("{0}")]
    Invalid(String),
}

fn default_summary_url() -> Url {
    Url::parse("http://127.0.0.1:7400/").expect("static URL")
}

fn default_binder_url() -> Url {
    Url::parse("http://127.0.0.1:7410/").expect("static URL")
}

fn default_proxies() -> Vec<IpAddr> {
    vec![
        IpAddr::V4(Ipv4Addr::LOCALHOST),
        IpAddr::V6(Ipv6Addr::LOCALHOST),
    ]
}

fn default_proxy_header() -> String {
    "x-forwarded-for".into()
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerConfig {
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default)]
    pub admin_token: String,
    #[serde(default = "default_summary_url")]
    pub summary_server: Url,
    #[serde(default = "default_binder_url")]
    pub binder: Url,
    #[serde(default = "default_proxies")]
    pub trusted_proxies: Vec<IpAddr>,
    #[serde(default = "default_proxy_header")]
    pub proxy_header: String,
    #[serde(default)]
    pub installed_at: Option<DateTime<Utc>>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            data_dir: default_data_dir(),
            admin_token: String::new(),
            summary_server: default_summary_url(),
            binder: default_binder_url(),
            trusted_proxies: default_proxies(),
            proxy_header: default_proxy_header(),
            installed_at: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MailConfig {
    #[serde(default)]
    pub sink: SinkKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayConfig {
    #[serde(default)]
    pub server: ServerConfig,
    #[serde(default)]
    pub fees: FeeSchedule,
    #[serde(default)]
    pub mail: MailConfig,
    #[serde(default)]
    pub journals: Vec<Journal>,
    #[serde(default)]
    pub institutions: Vec<Institution>,
    #[serde(default)]
    pub subscriptions: Vec<Subscription>,
    #[serde(default)]
    pub providers: Vec<ProviderConfig>,
    #[serde(default)]
    pub editors: Vec<EditorConfig>,
}

/// A validated configuration snapshot, immutable once built.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: GatewayConfig,
    pub consortium: Consortium,
    pub data_dir: PathBuf,
    index: InstitutionIndex,
}

impl GatewayConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// Validates and freezes the configuration. Relative data directories
    /// are resolved against `base_dir`.
    pub fn into_settings(self, base_dir: &Path) -> Result<Settings, ConfigError> {
        let adapters = AdapterRegistry::default();
        for p in &self.providers {
            if !adapters.contains(&p.adapter) {
                return Err(ConfigError::UnknownAdapter(p.id.clone(), p.adapter.clone()));
            }
        }
        let consortium = Consortium::new(
            self.institutions.clone(),
            self.journals.clone(),
            self.subscriptions.clone(),
        )?;
        for j in &consortium.journals {
            if !self.editors.is_empty() && !self.editors.iter().any(|e| e.id() == &j.editor) {
                tracing::warn!(issn = %j.issn, editor = %j.editor, "journal editor has no resolver configured");
            }
        }
        let data_dir = if self.server.data_dir.is_absolute() {
            self.server.data_dir.clone()
        } else {
            base_dir.join(&self.server.data_dir)
        };
        let index = InstitutionIndex::new(&consortium.institutions);
        Ok(Settings {
            config: self,
            consortium,
            data_dir,
            index,
        })
    }
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        GatewayConfig::from_toml(&text)?.into_settings(&base)
    }

    pub fn resolve_ip(&self, ip: IpAddr) -> Option<&Institution> {
        self.index
            .lookup(ip)
            .map(|n| &self.consortium.institutions[n])
    }

    pub fn institution(&self, id: &InstitutionId) -> Option<&Institution> {
        self.consortium.institution(id)
    }

    pub fn provider(&self, id: &str) -> Option<&ProviderConfig> {
        self.config.providers.iter().find(|p| p.id.as_str() == id)
    }

    pub fn installed_at(&self) -> DateTime<Utc> {
        self.config
            .server
            .installed_at
            .unwrap_or(DateTime::<Utc>::UNIX_EPOCH)
    }

    pub fn store_dir(&self) -> PathBuf {
        self.data_dir.join("store")
    }

    pub fn summary_dir(&self) -> PathBuf {
        self.data_dir.join("summary")
    }

    pub fn docserver_dir(&self, inst: &InstitutionId) -> PathBuf {
        self.data_dir.join("docserver").join(inst.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[server]
admin_token = "t"

[fees]
print = "0.50"

[[journals]]
issn = "0000-0019"
code = "J1"
title = "Journal of Networks"
domains = ["exact-sciences"]
editor = "editor-x"

[[institutions]]
id = "A"
name = "Institute A"
ip_ranges = ["10.1.0.0/16"]
document_server = "http://127.0.0.1:7401/"
[institutions.rights.researcher]
navigation_browsing = true
electronic_access = true

[[subscriptions]]
institution = "A"
issn = "0000-0019"
format = "Electronic"

[[providers]]
id = "swets"
adapter = "swetslike"

[[editors]]
resolver = "template"
id = "editor-x"
template = "http://127.0.0.1:7420/x/{issn}/{volume}/{first_page}.pdf"
"#;

    #[test]
    fn sample_loads() {
        let s = GatewayConfig::from_toml(SAMPLE)
            .unwrap()
            .into_settings(Path::new("/etc/docgate"))
            .unwrap();
        assert_eq!(s.data_dir, PathBuf::from("/etc/docgate/data"));
        assert_eq!(
            s.resolve_ip("10.1.9.9".parse().unwrap())
                .unwrap()
                .id
                .as_str(),
            "A"
        );
        assert_eq!(s.config.fees.print.to_string(), "0.50");
        assert_eq!(
            s.consortium.journal_by_ref("J1").unwrap().title,
            "Journal of Networks"
        );
        let again = GatewayConfig::from_toml(&s.config.to_toml()).unwrap();
        assert_eq!(again, s.config);
    }

    #[test]
    fn rejects_unknown_adapter_and_bad_issn() {
        let bad = SAMPLE.replace("adapter = \"swetslike\"", "adapter = \"telex\"");
        assert!(matches!(
            GatewayConfig::from_toml(&bad)
                .unwrap()
                .into_settings(Path::new(".")),
            Err(ConfigError::UnknownAdapter(..))
        ));
        let bad = SAMPLE.replace("issn = \"0000-0019\"\ncode", "issn = \"0000-0018\"\ncode");
        assert!(GatewayConfig::from_toml(&bad).is_err());
    }
}
