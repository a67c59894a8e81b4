use crate::model::Issn;

use super::{
    AccessClass, Consortium, DeliveryFormat, DeliveryMode, DeliveryPlan, Destination, Institution,
    PolicyError, ServiceRights, SubscriptionFormat,
};

/// Chooses how an article of `issn` reaches the requester.
///
/// Rules are tried in order; the first one whose holdings match and whose
/// rights flag is granted wins. Within a rule the lowest institution id is
/// the source.
///
/// 1. requester holds the electronic version: workstation delivery (`electronic_access`)
/// 2. another member holds it electronically: print at the requester's printer (`electronic_access`)
/// 3. a member holds paper and can digitalize: scan then print (`digitalization`)
/// 4. a member holds paper: photocopy by postal mail (`photocopy_service`)
///
/// If some rule matched on holdings but every matching rule was refused by
/// the rights flags, the result is [`PolicyError::RightsDenied`].
pub fn plan_delivery(
    requester: Option<&Institution>,
    rights: &ServiceRights,
    issn: &Issn,
    consortium: &Consortium,
) -> Result<DeliveryPlan, PolicyError> {
    let Some(req) = requester else {
        return Ok(DeliveryPlan::unavailable(None));
    };
    let printer = req.authorized_printers.first();
    let mut denied = false;
    let mut gate = |granted: bool| {
        denied |= !granted;
        granted
    };

    let shared = |mode, source: &Institution, destination| DeliveryPlan {
        mode,
        source_institution: Some(source.id.clone()),
        requester_institution: Some(req.id.clone()),
        destination: Some(destination),
        delivery_format: Some(DeliveryFormat::Paper),
        access_class: AccessClass::SharedMode,
    };

    if consortium.subscribes(&req.id, issn, SubscriptionFormat::Electronic)
        && gate(rights.electronic_access)
    {
        return Ok(DeliveryPlan {
            mode: DeliveryMode::ElectronicToWorkstation,
            source_institution: Some(req.id.clone()),
            requester_institution: Some(req.id.clone()),
            destination: Some(Destination::Workstation),
            delivery_format: Some(DeliveryFormat::Electronic),
            access_class: AccessClass::LocalMode,
        });
    }

    let electronic = consortium.subscribers(issn, SubscriptionFormat::Electronic);
    let paper = consortium.subscribers(issn, SubscriptionFormat::Paper);

    if let Some(printer) = printer {
        if let Some(source) = electronic.iter().find(|i| i.id != req.id) {
            if gate(rights.electronic_access) {
                return Ok(shared(
                    DeliveryMode::PrintAtAuthorizedPrinter,
                    source,
                    Destination::Printer(printer.clone()),
                ));
            }
        }
        if let Some(source) = paper.iter().find(|i| i.can_digitalize) {
            if gate(rights.digitalization) {
                return Ok(shared(
                    DeliveryMode::DigitalizeThenPrint,
                    source,
                    Destination::Printer(printer.clone()),
                ));
            }
        }
    }

    if let Some(source) = paper.first() {
        if gate(rights.photocopy_service) {
            return Ok(shared(
                DeliveryMode::PhotocopyPostalMail,
                source,
                Destination::PostalAddress,
            ));
        }
    }

    if denied {
        Err(PolicyError::RightsDenied)
    } else {
        Ok(DeliveryPlan::unavailable(Some(req.id.clone())))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::model::{Domain, Journal};
    use crate::policy::Subscription;

    fn issn(s: &str) -> Issn {
        s.parse().unwrap()
    }

    fn fixture() -> Consortium {
        let inst = |id: &str, n: u8, dig: bool| Institution {
            id: id.into(),
            name: id.into(),
            ip_ranges: vec![format!("10.{n}.0.0/16").parse().unwrap()],
            can_digitalize: dig,
            authorized_printers: vec![format!("{id}-P1")],
            postal_address: format!("{id} mailroom"),
            document_server: None,
            rights_by_category: BTreeMap::from([("researcher".to_string(), ServiceRights::all())]),
        };
        let journal = |s: &str| Journal {
            issn: issn(s),
            code: None,
            title: s.into(),
            domains: vec![Domain::ExactSciences],
            editor: "editor-x".into(),
        };
        let sub = |i: &str, s: &str, f| Subscription {
            institution: i.into(),
            issn: issn(s),
            format: f,
        };
        Consortium::new(
            vec![
                inst("A", 1, false),
                inst("B", 2, true),
                inst("C", 3, false),
                inst("D", 4, false),
            ],
            vec![
                journal("0000-0019"),
                journal("0000-0027"),
                journal("0000-0035"),
            ],
            vec![
                sub("A", "0000-0019", SubscriptionFormat::Electronic),
                sub("B", "0000-0027", SubscriptionFormat::Paper),
                sub("C", "0000-0035", SubscriptionFormat::Paper),
            ],
        )
        .unwrap()
    }

    fn plan(c: &Consortium, who: &str, j: &str) -> Result<DeliveryPlan, PolicyError> {
        let req = c.institution(&who.into());
        plan_delivery(req, &ServiceRights::all(), &issn(j), c)
    }

    #[test]
    fn table_rows() {
        let c = fixture();
        let p = plan(&c, "A", "0000-0019").unwrap();
        assert_eq!(p.mode, DeliveryMode::ElectronicToWorkstation);
        assert_eq!(p.access_class, AccessClass::LocalMode);

        let p = plan(&c, "D", "0000-0019").unwrap();
        assert_eq!(p.mode, DeliveryMode::PrintAtAuthorizedPrinter);
        assert_eq!(p.source_institution, Some("A".into()));
        assert_eq!(p.delivery_format, Some(DeliveryFormat::Paper));
        assert_eq!(p.destination, Some(Destination::Printer("D-P1".into())));

        let p = plan(&c, "D", "0000-0027").unwrap();
        assert_eq!(p.mode, DeliveryMode::DigitalizeThenPrint);
        assert_eq!(p.source_institution, Some("B".into()));

        let p = plan(&c, "D", "0000-0035").unwrap();
        assert_eq!(p.mode, DeliveryMode::PhotocopyPostalMail);
        assert_eq!(p.source_institution, Some("C".into()));

        let p = plan(&c, "D", "0000-0043").unwrap();
        assert_eq!(p.mode, DeliveryMode::Unavailable);
        assert!(p.source_institution.is_none());
    }

    #[test]
    fn unaffiliated_gets_nothing() {
        let c = fixture();
        let p = plan_delivery(None, &ServiceRights::all(), &issn("0000-0019"), &c).unwrap();
        assert_eq!(p.mode, DeliveryMode::Unavailable);
        assert!(p.check_invariants().is_ok());
    }

    #[test]
    fn denied_when_only_match_is_refused() {
        let c = fixture();
        let rights = ServiceRights {
            photocopy_service: false,
            ..ServiceRights::all()
        };
        let d = c.institution(&"D".into());
        assert_eq!(
            plan_delivery(d, &rights, &issn("0000-0035"), &c),
            Err(PolicyError::RightsDenied)
        );
    }

    #[test]
    fn local_electronic_falls_through_to_photocopy() {
        let mut c = fixture();
        c.subscriptions.push(Subscription {
            institution: "C".into(),
            issn: issn("0000-0019"),
            format: SubscriptionFormat::Paper,
        });
        let rights = ServiceRights {
            electronic_access: false,
            ..ServiceRights::all()
        };
        let p = plan_delivery(c.institution(&"A".into()), &rights, &issn("0000-0019"), &c).unwrap();
        assert_eq!(p.mode, DeliveryMode::PhotocopyPostalMail);
        assert_eq!(p.source_institution, Some("C".into()));
    }

    #[test]
    fn both_formats_behave_as_electronic() {
        let mut c = fixture();
        c.subscriptions.push(Subscription {
            institution: "A".into(),
            issn: issn("0000-0019"),
            format: SubscriptionFormat::Paper,
        });
        assert_eq!(
            plan(&c, "A", "0000-0019").unwrap().mode,
            DeliveryMode::ElectronicToWorkstation
        );
    }

    #[test]
    fn deterministic() {
        let c = fixture();
        for who in ["A", "B", "C", "D"] {
            for j in ["0000-0019", "0000-0027", "0000-0035"] {
                assert_eq!(plan(&c, who, j), plan(&c, who, j));
            }
        }
    }
}
