//! Consortium model, access rights and the delivery decision engine.
//!
//! Everything here is pure over an immutable [`Consortium`] snapshot. Services
//! share a snapshot behind an `Arc` and swap it wholesale when the
//! configuration is reloaded.

mod planner;
mod records;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::model::{InstitutionId, Issn, Journal};

pub use planner::plan_delivery;
pub use records::{emit_records, BillingRecord, CopyrightPaymentRecord, FeeSchedule};
pub use resolve::{resolve_institution, InstitutionIndex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("user category `{0}` is not configured")]
    UnknownCategory(String),
    #[error("access rights do not permit any available delivery mode")]
    RightsDenied,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsortiumError {
    #[error("IP ranges {0} ({1}) and {2} ({3}) overlap")]
    OverlappingRanges(IpNet, InstitutionId, IpNet, InstitutionId),
    #[error("duplicate institution `{0}`")]
    DuplicateInstitution(InstitutionId),
    #[error("duplicate journal {0}")]
    DuplicateJournal(Issn),
    #[error("journal {0} must have one or two domains")]
    BadDomains(Issn),
    #[error("duplicate subscription {0} {1} {2:?}")]
    DuplicateSubscription(InstitutionId, Issn, SubscriptionFormat),
    #[error("subscription references unknown {0}")]
    UnknownReference(String),
    #[error("rights for `{1}` at {0} grant services without navigation")]
    NavigationNotImplied(InstitutionId, String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ServiceRights {
    #[serde(default)]
    pub navigation_browsing: bool,
    #[serde(default)]
    pub alert_service: bool,
    #[serde(default)]
    pub photocopy_service: bool,
    #[serde(default)]
    pub digitalization: bool,
    #[serde(default)]
    pub electronic_access: bool,
}

impl ServiceRights {
    pub const fn all() -> Self {
        ServiceRights {
            navigation_browsing: true,
            alert_service: true,
            photocopy_service: true,
            digitalization: true,
            electronic_access: true,
        }
    }

    /// What an unaffiliated visitor gets.
    pub const fn navigation_only() -> Self {
        ServiceRights {
            navigation_browsing: true,
            alert_service: false,
            photocopy_service: false,
            digitalization: false,
            electronic_access: false,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.navigation_browsing
            || !(self.alert_service
                || self.photocopy_service
                || self.digitalization
                || self.electronic_access)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Institution {
    pub id: InstitutionId,
    pub name: String,
    pub ip_ranges: Vec<IpNet>,
    #[serde(default)]
    pub can_digitalize: bool,
    #[serde(default)]
    pub authorized_printers: Vec<String>,
    #[serde(default)]
    pub postal_address: String,
    #[serde(default)]
    pub document_server: Option<Url>,
    #[serde(default, rename = "rights")]
    pub rights_by_category: BTreeMap<String, ServiceRights>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubscriptionFormat {
    Electronic,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscription {
    pub institution: InstitutionId,
    pub issn: Issn,
    pub format: SubscriptionFormat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserContext {
    pub source_ip: IpAddr,
    pub category: String,
    #[serde(default)]
    pub email: Option<String>,
}

/// Returns the configured flags for the user's category, verbatim.
pub fn rights_for(user: &UserContext, inst: &Institution) -> Result<ServiceRights, PolicyError> {
    inst.rights_by_category
        .get(&user.category)
        .copied()
        .ok_or_else(|| PolicyError::UnknownCategory(user.category.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeliveryMode {
    ElectronicToWorkstation,
    PrintAtAuthorizedPrinter,
    DigitalizeThenPrint,
    PhotocopyPostalMail,
    Unavailable,
}

impl DeliveryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DeliveryMode::ElectronicToWorkstation => "ElectronicToWorkstation",
            DeliveryMode::PrintAtAuthorizedPrinter => "PrintAtAuthorizedPrinter",
            DeliveryMode::DigitalizeThenPrint => "DigitalizeThenPrint",
            DeliveryMode::PhotocopyPostalMail => "PhotocopyPostalMail",
            DeliveryMode::Unavailable => "Unavailable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Destination {
    Workstation,
    Printer(String),
    PostalAddress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeliveryFormat {
    Electronic,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessClass {
    LocalMode,
    SharedMode,
    None,
}

/// Outcome of the delivery decision. For `Unavailable`, destination and
/// format are absent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeliveryPlan {
    pub mode: DeliveryMode,
    pub source_institution: Option<InstitutionId>,
    pub requester_institution: Option<InstitutionId>,
    pub destination: Option<Destination>,
    pub delivery_format: Option<DeliveryFormat>,
    pub access_class: AccessClass,
}

impl DeliveryPlan {
    pub fn unavailable(requester: Option<InstitutionId>) -> Self {
        DeliveryPlan {
            mode: DeliveryMode::Unavailable,
            source_institution: None,
            requester_institution: requester,
            destination: None,
            delivery_format: None,
            access_class: AccessClass::None,
        }
    }

    pub fn is_cross_institution(&self) -> bool {
        matches!(
            (&self.source_institution, &self.requester_institution),
            (Some(s), r) if r.as_ref() != Some(s)
        )
    }

    /// Checks the structural invariants every plan must satisfy.
    pub fn check_invariants(&self) -> Result<(), String> {
        let electronic_mode = self.mode == DeliveryMode::ElectronicToWorkstation;
        let electronic_format = self.delivery_format == Some(DeliveryFormat::Electronic);
        let local = self.access_class == AccessClass::LocalMode;
        if electronic_mode != electronic_format || electronic_format != local {
            return Err(format!("electronic/local mismatch in {self:?}"));
        }
        let unavailable = self.mode == DeliveryMode::Unavailable;
        if unavailable != self.source_institution.is_none()
            || unavailable != (self.access_class == AccessClass::None)
        {
            return Err(format!("unavailable/source mismatch in {self:?}"));
        }
        if unavailable != self.delivery_format.is_none()
            || unavailable != self.destination.is_none()
        {
            return Err(format!("unavailable plan carries delivery data: {self:?}"));
        }
        if self.is_cross_institution() && self.delivery_format != Some(DeliveryFormat::Paper) {
            return Err(format!("cross-institution plan not on paper: {self:?}"));
        }
        Ok(())
    }
}

/// Immutable snapshot of the consortium configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consortium {
    pub institutions: Vec<Institution>,
    pub journals: Vec<Journal>,
    pub subscriptions: Vec<Subscription>,
}

impl Consortium {
    /// Sorts institutions by id and checks the configuration invariants.
    pub fn new(
        mut institutions: Vec<Institution>,
        journals: Vec<Journal>,
        subscriptions: Vec<Subscription>,
    ) -> Result<Self, ConsortiumError> {
        institutions.sort_by(|a, b| a.id.cmp(&b.id));
        let c = Consortium {
            institutions,
            journals,
            subscriptions,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConsortiumError> {
        let mut ids = BTreeSet::new();
        for inst in &self.institutions {
            if !ids.insert(&inst.id) {
                return Err(ConsortiumError::DuplicateInstitution(inst.id.clone()));
            }
            for (category, rights) in &inst.rights_by_category {
                if !rights.is_consistent() {
                    return Err(ConsortiumError::NavigationNotImplied(
                        inst.id.clone(),
                        category.clone(),
                    ));
                }
            }
        }
        let ranges: Vec<(&IpNet, &InstitutionId)> = self
            .institutions
            .iter()
            .flat_map(|i| i.ip_ranges.iter().map(move |r| (r, &i.id)))
            .collect();
        for (n, (ra, ia)) in ranges.iter().enumerate() {
            for (rb, ib) in &ranges[n + 1..] {
                if ia != ib && (ra.contains(&rb.network()) || rb.contains(&ra.network())) {
                    return Err(ConsortiumError::OverlappingRanges(
                        **ra,
                        (*ia).clone(),
                        **rb,
                        (*ib).clone(),
                    ));
                }
            }
        }
        let mut issns = BTreeSet::new();
        for j in &self.journals {
            if !issns.insert(&j.issn) {
                return Err(ConsortiumError::DuplicateJournal(j.issn.clone()));
            }
            let distinct: BTreeSet<_> = j.domains.iter().collect();
            if distinct.is_empty() || distinct.len() != j.domains.len() || j.domains.len() > 2 {
                return Err(ConsortiumError::BadDomains(j.issn.clone()));
            }
        }
        let mut subs = BTreeSet::new();
        for s in &self.subscriptions {
            if !ids.contains(&s.institution) {
                return Err(ConsortiumError::UnknownReference(format!(
                    "institution `{}`",
                    s.institution
                )));
            }
            if !issns.contains(&s.issn) {
                return Err(ConsortiumError::UnknownReference(format!(
                    "journal {}",
                    s.issn
                )));
            }
            if !subs.insert((&s.institution, &s.issn, s.format)) {
                return Err(ConsortiumError::DuplicateSubscription(
                    s.institution.clone(),
                    s.issn.clone(),
                    s.format,
                ));
            }
        }
        Ok(())
    }

    pub fn institution(&self, id: &InstitutionId) -> Option<&Institution> {
        self.institutions.iter().find(|i| &i.id == id)
    }

    pub fn journal(&self, issn: &Issn) -> Option<&Journal> {
        self.journals.iter().find(|j| &j.issn == issn)
    }

    /// Resolves an ISSN or a journal alias code.
    pub fn journal_by_ref(&self, reference: &str) -> Option<&Journal> {
        self.journals.iter().find(|j| {
            j.issn.as_str().eq_ignore_ascii_case(reference) || j.code.as_deref() == Some(reference)
        })
    }

    pub fn subscribes(
        &self,
        inst: &InstitutionId,
        issn: &Issn,
        format: SubscriptionFormat,
    ) -> bool {
        self.subscriptions
            .iter()
            .any(|s| &s.institution == inst && &s.issn == issn && s.format == format)
    }

    /// Subscribers of `issn` in `format`, in ascending institution id order.
    pub fn subscribers(&self, issn: &Issn, format: SubscriptionFormat) -> Vec<&Institution> {
        self.institutions
            .iter()
            .filter(|i| self.subscribes(&i.id, issn, format))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::Ipv4Addr;

    fn inst(id: &str, range: &str) -> Institution {
        Institution {
            id: id.into(),
            name: id.to_string(),
            ip_ranges: vec![range.parse().unwrap()],
            can_digitalize: false,
            authorized_printers: vec![],
            postal_address: String::new(),
            document_server: None,
            rights_by_category: BTreeMap::new(),
        }
    }

    #[test]
    fn overlapping_ranges_rejected() {
        let err = Consortium::new(
            vec![inst("A", "10.1.0.0/16"), inst("B", "10.1.2.0/24")],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, ConsortiumError::OverlappingRanges(..)));
        assert!(Consortium::new(
            vec![inst("A", "10.1.0.0/16"), inst("B", "10.2.0.0/16")],
            vec![],
            vec![]
        )
        .is_ok());
    }

    #[test]
    fn rights_lookup_is_verbatim() {
        let mut a = inst("A", "10.1.0.0/16");
        a.rights_by_category
            .insert("researcher".into(), ServiceRights::all());
        a.rights_by_category
            .insert("student".into(), ServiceRights::navigation_only());
        let user = |c: &str| UserContext {
            source_ip: IpAddr::V4(Ipv4Addr::new(10, 1, 0, 1)),
            category: c.into(),
            email: None,
        };
        assert_eq!(
            rights_for(&user("researcher"), &a),
            Ok(ServiceRights::all())
        );
        assert_eq!(
            rights_for(&user("student"), &a),
            Ok(ServiceRights::navigation_only())
        );
        assert_eq!(
            rights_for(&user("visitor"), &a),
            Err(PolicyError::UnknownCategory("visitor".into()))
        );
    }

    #[test]
    fn navigation_must_be_implied() {
        let mut a = inst("A", "10.1.0.0/16");
        a.rights_by_category.insert(
            "odd".into(),
            ServiceRights {
                photocopy_service: true,
                ..Default::default()
            },
        );
        assert!(matches!(
            Consortium::new(vec![a], vec![], vec![]),
            Err(ConsortiumError::NavigationNotImplied(..))
        ));
    }
}
