//! Value-weighted illiquidity of the high-ownership portfolio.
//!
//! Unlike the market aggregate, the portfolio first averages illiquidity
//! levels (previous-day cap weights) and then takes the log change of that
//! average. Changes are only taken between days of the same quarter, since
//! membership is reset each quarter.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;

use crate::ingest::FirmQuarterSeries;
use crate::types::{Quarter, StockId};

/// Portfolio members per quarter, chosen from ownership at the prior quarter end.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HiMembership {
    members: BTreeMap<Quarter, BTreeSet<StockId>>,
}

impl HiMembership {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, quarter: Quarter, stock: StockId) {
        self.members.entry(quarter).or_default().insert(stock);
    }

    pub fn contains(&self, quarter: Quarter, stock: &StockId) -> bool {
        self.members.get(&quarter).is_some_and(|m| m.contains(stock))
    }

    pub fn members(&self, quarter: Quarter) -> impl Iterator<Item = &StockId> {
        self.members.get(&quarter).into_iter().flatten()
    }

    pub fn quarters(&self) -> impl Iterator<Item = Quarter> + '_ {
        self.members.keys().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiDay {
    pub date: NaiveDate,
    pub n_members: usize,
    pub illiq_hi: f64,
    /// Log change from the previous defined day in the same quarter.
    pub delta_illiq_hi: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct LevelTotals {
    n: usize,
    w: f64,
    w_illiq: f64,
}

#[derive(Debug, Clone)]
pub struct HiPortfolio {
    membership: HiMembership,
    dates: Vec<NaiveDate>,
    totals: Vec<LevelTotals>,
}

impl HiPortfolio {
    /// Member levels with a known previous-day cap enter the daily average.
    pub fn build(series: &[FirmQuarterSeries], membership: &HiMembership) -> Self {
        let mut by_date: BTreeMap<NaiveDate, LevelTotals> = BTreeMap::new();
        for s in series {
            if !membership.contains(s.quarter, &s.stock_id) {
                continue;
            }
            for l in &s.levels {
                let Some(w) = l.weight else { continue };
                let t = by_date.entry(l.date).or_default();
                t.n += 1;
                t.w += w;
                t.w_illiq += w * l.illiq;
            }
        }
        let (dates, totals) = by_date.into_iter().unzip();
        HiPortfolio {
            membership: membership.clone(),
            dates,
            totals,
        }
    }

    pub fn membership(&self) -> &HiMembership {
        &self.membership
    }

    pub fn days(&self) -> Vec<HiDay> {
        let levels: Vec<Option<f64>> = self.totals.iter().map(|t| level(t.n, t.w, t.w_illiq)).collect();
        let deltas = chained_deltas(&self.dates, &levels);
        self.dates
            .iter()
            .zip(&self.totals)
            .zip(levels.iter().zip(deltas))
            .filter_map(|((date, t), (l, d))| {
                l.map(|illiq_hi| HiDay {
                    date: *date,
                    n_members: t.n,
                    illiq_hi,
                    delta_illiq_hi: d,
                })
            })
            .collect()
    }

    /// Portfolio changes on `dates` (a market calendar inside `series.quarter`).
    /// With `exclude_self`, a member firm's own level is removed first.
    pub fn view(&self, series: &FirmQuarterSeries, exclude_self: bool, dates: &[NaiveDate]) -> Vec<Option<f64>> {
        let q = series.quarter;
        let exclude_self = exclude_self && self.membership.contains(q, &series.stock_id);
        let lo = self.dates.partition_point(|d| *d < q.first_day());
        let hi = self.dates.partition_point(|d| *d <= q.last_day());
        let mut own = series.levels.iter().peekable();
        let mut levels = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let date = self.dates[k];
            let t = self.totals[k];
            while own.next_if(|l| l.date < date).is_some() {}
            let mine = if exclude_self {
                own.next_if(|l| l.date == date).and_then(|l| l.weight.map(|w| (w, l.illiq)))
            } else {
                None
            };
            levels.push(match mine {
                Some((w, x)) if t.n > 0 => level(t.n - 1, t.w - w, t.w_illiq - w * x),
                _ => level(t.n, t.w, t.w_illiq),
            });
        }
        let hi_dates = &self.dates[lo..hi];
        let deltas = chained_deltas(hi_dates, &levels);
        dates
            .iter()
            .map(|d| hi_dates.binary_search(d).ok().and_then(|k| deltas[k]))
            .collect()
    }
}

fn level(n: usize, w: f64, w_illiq: f64) -> Option<f64> {
    (n >= 1 && w > 0.0).then(|| w_illiq / w).filter(|l| *l > 0.0)
}

fn chained_deltas(dates: &[NaiveDate], levels: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut prev: Option<(Quarter, f64)> = None;
    dates
        .iter()
        .zip(levels)
        .map(|(d, l)| {
            let q = Quarter::of(*d);
            let l = (*l)?;
            let out = match prev {
                Some((pq, pl)) if pq == q => Some((l / pl).ln()),
                _ => None,
            };
            prev = Some((q, l));
            out
        })
        .collect()
}

/// Daily portfolio levels and changes for all quarters with members.
pub fn high_ownership_portfolio_illiq(series: &[FirmQuarterSeries], membership: &HiMembership) -> Vec<HiDay> {
    HiPortfolio::build(series, membership).days()
}
