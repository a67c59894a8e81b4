use chrono::{DateTime, Utc};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::model::{ArticleKey, InstitutionId};

use super::{DeliveryFormat, DeliveryMode, DeliveryPlan, Institution};

/// Flat fee per delivery mode plus a per-page copyright fee. All default to zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeeSchedule {
    pub electronic: Decimal,
    pub print: Decimal,
    pub digitalize_print: Decimal,
    pub photocopy: Decimal,
    pub copyright_per_page: Decimal,
}

impl FeeSchedule {
    pub fn flat_fee(&self, mode: DeliveryMode) -> Decimal {
        match mode {
            DeliveryMode::ElectronicToWorkstation => self.electronic,
            DeliveryMode::PrintAtAuthorizedPrinter => self.print,
            DeliveryMode::DigitalizeThenPrint => self.digitalize_print,
            DeliveryMode::PhotocopyPostalMail => self.photocopy,
            DeliveryMode::Unavailable => Decimal::ZERO,
        }
    }
}

/// Inter-institution billing trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BillingRecord {
    pub id: Uuid,
    pub timestamp: DateTime<Utc>,
    pub source_institution: InstitutionId,
    pub requesting_institution: InstitutionId,
    pub article: ArticleKey,
    pub mode: DeliveryMode,
    pub fee: Decimal,
}

/// Copyright payment obligation for one paper reproduction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopyrightPaymentRecord {
    pub id: Uuid,
    pub timestamp: DateTime<Utc>,
    pub article: ArticleKey,
    pub paying_institution: InstitutionId,
    pub fee: Decimal,
}

/// Accounting records owed for one executed delivery.
///
/// Billing only when the source differs from the requester; copyright only
/// for paper deliveries. The reproducing (source) institution carries the
/// copyright obligation. `pages` scales the per-page copyright fee.
pub fn emit_records(
    plan: &DeliveryPlan,
    requester: &Institution,
    article: &ArticleKey,
    pages: u32,
    fees: &FeeSchedule,
    now: DateTime<Utc>,
) -> (Option<BillingRecord>, Option<CopyrightPaymentRecord>) {
    let Some(source) = plan.source_institution.as_ref() else {
        return (None, None);
    };
    let billing = (source != &requester.id).then(|| BillingRecord {
        id: Uuid::new_v4(),
        timestamp: now,
        source_institution: source.clone(),
        requesting_institution: requester.id.clone(),
        article: article.clone(),
        mode: plan.mode,
        fee: fees.flat_fee(plan.mode),
    });
    let copyright =
        (plan.delivery_format == Some(DeliveryFormat::Paper)).then(|| CopyrightPaymentRecord {
            id: Uuid::new_v4(),
            timestamp: now,
            article: article.clone(),
            paying_institution: source.clone(),
            fee: fees.copyright_per_page * Decimal::from(pages),
        });
    (billing, copyright)
}
