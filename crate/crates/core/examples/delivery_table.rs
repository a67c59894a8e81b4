// Routes one article request per row of the delivery table over the demo
// consortium and shows the accounting each delivery owes.
//
//     cargo run --example delivery_table

use std::error::Error;
use std::path::Path;

use chrono::Utc;
use docgate::demo::{demo_settings, DemoPorts, J1, J2, J3};
use docgate::policy::{emit_records, plan_delivery, rights_for, UserContext};

pub fn run_example() -> Result<String, Box<dyn Error>> {
    let settings = demo_settings(&DemoPorts::default(), Path::new("demo-data"));
    let consortium = &settings.consortium;
    let mut out = String::new();
    for (ip, issn) in [
        ("10.1.0.5", J1),
        ("10.4.0.9", J1),
        ("10.4.0.9", J2),
        ("10.4.0.9", J3),
        ("192.168.9.9", J1),
    ] {
        let user = UserContext {
            source_ip: ip.parse()?,
            category: "researcher".into(),
            email: None,
        };
        let inst = settings.resolve_ip(user.source_ip);
        let rights = match inst {
            Some(i) => rights_for(&user, i)?,
            None => docgate::policy::ServiceRights::navigation_only(),
        };
        let plan = plan_delivery(inst, &rights, &issn.parse()?, consortium)?;
        let source = plan.source_institution.as_ref().map_or("-", |s| s.as_str());
        out.push_str(&format!(
            "{ip:<12} {issn}  {:<24} source={source}",
            plan.mode.as_str()
        ));
        if let Some(requester) = inst.filter(|_| plan.source_institution.is_some()) {
            let article = format!("{issn}:v1:i1:a1").parse()?;
            let (billing, copyright) = emit_records(
                &plan,
                requester,
                &article,
                12,
                &settings.config.fees,
                Utc::now(),
            );
            if let Some(b) = billing {
                out.push_str(&format!(" billing={}", b.fee));
            }
            if let Some(c) = copyright {
                out.push_str(&format!(" copyright={}", c.fee));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn Error>> {
    print!("{}", run_example()?);
    Ok(())
}
