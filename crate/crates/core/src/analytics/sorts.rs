//! Rank-based bucket sorts.
//!
//! Stocks are ranked ascending by value with ties broken by stock id. With
//! `n` stocks and `k` buckets every bucket gets `n / k` stocks and the
//! `n % k` leftovers go one each to the lowest buckets (10 into terciles is
//! 4/3/3). Buckets are numbered from 1 (lowest values).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::illiq::HiMembership;
use crate::ingest::{FirmQuarterSeries, OwnershipPanel};
use crate::types::{OwnershipCategory, Quarter, SizeGroup, StockId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortVariable {
    MarketCap,
    Ownership(OwnershipCategory),
}

/// A sort on a characteristic measured at the end of the previous quarter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SortSpec {
    pub variable: SortVariable,
    pub n_buckets: usize,
}

/// Population of each bucket for `n` items.
pub fn bucket_sizes(n: usize, n_buckets: usize) -> Vec<usize> {
    let base = n / n_buckets;
    let rem = n % n_buckets;
    (0..n_buckets).map(|b| base + usize::from(b < rem)).collect()
}

/// Bucket label (1-based) for each entry of `cross_section`, in input order.
pub fn sort_assign(cross_section: &[(&StockId, f64)], n_buckets: usize) -> Result<Vec<usize>> {
    if n_buckets == 0 {
        return Err(Error::Config("a sort needs at least one bucket".into()));
    }
    if let Some((id, _)) = cross_section.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InsufficientData(format!("non-finite sort value for {id}")));
    }
    let mut order: Vec<usize> = (0..cross_section.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, va) = cross_section[a];
        let (ib, vb) = cross_section[b];
        va.total_cmp(&vb).then_with(|| ia.cmp(ib))
    });
    let mut labels = vec![0; cross_section.len()];
    let mut pos = 0;
    for (b, size) in bucket_sizes(cross_section.len(), n_buckets).into_iter().enumerate() {
        for &i in &order[pos..pos + size] {
            labels[i] = b + 1;
        }
        pos += size;
    }
    Ok(labels)
}

/// Dependent sort: `inner` buckets are formed separately within each outer bucket.
pub fn nested_sort_assign(
    cross_section: &[(&StockId, f64)],
    outer: &[usize],
    n_buckets: usize,
) -> Result<Vec<usize>> {
    if outer.len() != cross_section.len() {
        return Err(Error::InsufficientData("outer labels do not match the cross-section".into()));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, g) in outer.iter().enumerate() {
        groups.entry(*g).or_default().push(i);
    }
    let mut labels = vec![0; cross_section.len()];
    for idx in groups.values() {
        let sub: Vec<(&StockId, f64)> = idx.iter().map(|&i| cross_section[i]).collect();
        for (&i, l) in idx.iter().zip(sort_assign(&sub, n_buckets)?) {
            labels[i] = l;
        }
    }
    Ok(labels)
}

/// Size group of every sample firm-quarter with a known prior-quarter market cap.
pub type SizeGroups = HashMap<(StockId, Quarter), SizeGroup>;

/// Terciles on prior-quarter-end market cap, formed each quarter over the sample firm-quarters.
pub fn size_terciles(series: &[FirmQuarterSeries]) -> SizeGroups {
    let mut by_q: BTreeMap<Quarter, Vec<(&StockId, f64)>> = BTreeMap::new();
    for s in series {
        match s.lagged_market_cap {
            Some(c) => by_q.entry(s.quarter).or_default().push((&s.stock_id, c)),
            None => log::debug!("{} {}: no prior-quarter market cap, left out of size sorts", s.stock_id, s.quarter),
        }
    }
    let mut out = HashMap::new();
    for (q, cs) in by_q {
        let labels = sort_assign(&cs, 3).expect("market caps are finite");
        for ((id, _), l) in cs.iter().zip(labels) {
            out.insert(((*id).clone(), q), SizeGroup::from_tercile(l));
        }
    }
    out
}

/// Top bucket of a sort on prior-quarter-end ownership among each quarter's sample firms.
pub fn high_ownership_membership(
    series: &[FirmQuarterSeries],
    ownership: &OwnershipPanel,
    category: OwnershipCategory,
    n_buckets: usize,
) -> HiMembership {
    let mut by_q: BTreeMap<Quarter, Vec<(&StockId, f64)>> = BTreeMap::new();
    for s in series {
        if let Some(f) = ownership.fraction(&s.stock_id, s.quarter.prev(), category) {
            by_q.entry(s.quarter).or_default().push((&s.stock_id, f));
        }
    }
    let mut m = HiMembership::new();
    for (q, cs) in by_q {
        let labels = sort_assign(&cs, n_buckets).expect("fractions are finite");
        for ((id, _), l) in cs.iter().zip(labels) {
            if l == n_buckets {
                m.insert(q, (*id).clone());
            }
        }
    }
    m
}
