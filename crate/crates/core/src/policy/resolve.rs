use std::net::IpAddr;

use ipnet::IpNet;

use super::Institution;

/// Finds the institution owning `ip`. Registry ranges are disjoint, so the
/// first containing range is the only one.
pub fn resolve_institution<'a>(ip: IpAddr, registry: &'a [Institution]) -> Option<&'a Institution> {
    registry
        .iter()
        .find(|inst| inst.ip_ranges.iter().any(|r| r.contains(&ip)))
}

/// Sorted interval index over every configured range, for request handlers
/// that resolve on each call.
#[derive(Debug, Clone, Default)]
pub struct InstitutionIndex {
    // (first address, last address, institution position); v4 mapped into v6 space
    intervals: Vec<(u128, u128, usize)>,
}

fn as_u128(ip: IpAddr) -> u128 {
    match ip {
        IpAddr::V4(v4) => u128::from(v4.to_ipv6_mapped()),
        IpAddr::V6(v6) => u128::from(v6),
    }
}

fn bounds(net: &IpNet) -> (u128, u128) {
    (as_u128(net.network()), as_u128(net.broadcast()))
}

impl InstitutionIndex {
    pub fn new(registry: &[Institution]) -> Self {
        let mut intervals: Vec<_> = registry
            .iter()
            .enumerate()
            .flat_map(|(n, inst)| {
                inst.ip_ranges.iter().map(move |r| {
                    let (lo, hi) = bounds(r);
                    (lo, hi, n)
                })
            })
            .collect();
        intervals.sort_unstable();
        InstitutionIndex { intervals }
    }

    /// Position of the owning institution in the registry the index was built from.
    pub fn lookup(&self, ip: IpAddr) -> Option<usize> {
        let x = as_u128(ip);
        let idx = self.intervals.partition_point(|(lo, _, _)| *lo <= x);
        let (_, hi, n) = *self.intervals.get(idx.checked_sub(1)?)?;
        (x <= hi).then_some(n)
    }
}
