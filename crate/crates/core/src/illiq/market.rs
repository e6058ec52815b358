//! Cross-sectional market aggregates with O(1) leave-one-out views.
//!
//! Each day stores the plain sums `W = sum w_j` and `S = sum w_j x_j` over all
//! contributing stocks, accumulated in stock-id order so results do not depend
//! on scheduling. Excluding stock `i` is then `(S - w_i x_i) / (W - w_i)`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{DayObs, FirmQuarterSeries};
use crate::types::Quarter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketWeighting {
    /// Previous-day market capitalization weights.
    #[default]
    Value,
    Equal,
}

/// One stock's input to a single day's aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub weight: f64,
    pub value: f64,
}

/// Weighted mean of `contributions` with `exclude` left out; `None` with fewer than two left.
pub fn market_delta_illiq(
    contributions: &[Contribution],
    weighting: MarketWeighting,
    exclude: Option<usize>,
) -> Option<f64> {
    let mut w_sum = 0.0;
    let mut wx_sum = 0.0;
    let mut n = 0;
    for (i, c) in contributions.iter().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        let w = match weighting {
            MarketWeighting::Value => c.weight,
            MarketWeighting::Equal => 1.0,
        };
        w_sum += w;
        wx_sum += w * c.value;
        n += 1;
    }
    (n >= 2 && w_sum > 0.0).then(|| wx_sum / w_sum)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Totals {
    n: usize,
    w: f64,
    w_delta: f64,
    w_ret: f64,
    w_turnover: f64,
}

/// Daily market aggregate without exclusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketDay {
    pub date: NaiveDate,
    pub n_stocks: usize,
    pub delta_illiq_mkt: Option<f64>,
    pub ret_mkt: Option<f64>,
    pub turnover_mkt: Option<f64>,
    /// Percentage change in market turnover from the previous market day in the same quarter.
    pub turnover_change_mkt: Option<f64>,
}

/// Market regressors on the market calendar of one quarter, possibly excluding one firm.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorView {
    pub quarter: Quarter,
    pub dates: Vec<NaiveDate>,
    pub delta: Vec<Option<f64>>,
    pub ret: Vec<Option<f64>>,
    pub turnover: Vec<Option<f64>>,
}

impl FactorView {
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// `(to_k - to_{k-1}) / to_{k-1}`; undefined at the first day or when prior turnover is zero.
    pub fn turnover_change(&self, k: usize) -> Option<f64> {
        let cur = self.turnover[k]?;
        let prev = self.turnover[k.checked_sub(1)?]?;
        (prev > 0.0).then(|| (cur - prev) / prev)
    }
}

#[derive(Debug, Clone)]
pub struct MarketPanel {
    weighting: MarketWeighting,
    dates: Vec<NaiveDate>,
    totals: Vec<Totals>,
}

impl MarketPanel {
    /// Aggregates surviving firm-days. `series` should be in (stock, quarter)
    /// order, as produced by the filter stage, to pin the summation order.
    pub fn build(series: &[FirmQuarterSeries], weighting: MarketWeighting) -> Self {
        let mut by_date: BTreeMap<NaiveDate, Totals> = BTreeMap::new();
        for s in series {
            for d in &s.days {
                let w = Self::weight_of(weighting, d);
                let t = by_date.entry(d.date).or_default();
                t.n += 1;
                t.w += w;
                t.w_delta += w * d.delta_illiq;
                t.w_ret += w * d.ret;
                t.w_turnover += w * d.turnover;
            }
        }
        let (dates, totals) = by_date.into_iter().unzip();
        MarketPanel {
            weighting,
            dates,
            totals,
        }
    }

    fn weight_of(weighting: MarketWeighting, d: &DayObs) -> f64 {
        match weighting {
            MarketWeighting::Value => d.weight,
            MarketWeighting::Equal => 1.0,
        }
    }

    pub fn weighting(&self) -> MarketWeighting {
        self.weighting
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    fn quarter_range(&self, q: Quarter) -> std::ops::Range<usize> {
        let lo = self.dates.partition_point(|d| *d < q.first_day());
        let hi = self.dates.partition_point(|d| *d <= q.last_day());
        lo..hi
    }

    /// Quarters present on the market calendar, in order.
    pub fn quarters(&self) -> Vec<Quarter> {
        let mut qs: Vec<Quarter> = self.dates.iter().map(|d| Quarter::of(*d)).collect();
        qs.dedup();
        qs
    }

    /// Aggregates over all stocks, one entry per market day.
    pub fn days(&self) -> Vec<MarketDay> {
        let mut out: Vec<MarketDay> = Vec::with_capacity(self.dates.len());
        for (k, (date, t)) in self.dates.iter().zip(&self.totals).enumerate() {
            let ok = t.n >= 2 && t.w > 0.0;
            let turnover_mkt = ok.then(|| t.w_turnover / t.w);
            let turnover_change_mkt = match (k.checked_sub(1), turnover_mkt) {
                (Some(j), Some(cur)) if Quarter::of(self.dates[j]) == Quarter::of(*date) => out[j]
                    .turnover_mkt
                    .filter(|p| *p > 0.0)
                    .map(|p| (cur - p) / p),
                _ => None,
            };
            out.push(MarketDay {
                date: *date,
                n_stocks: t.n,
                delta_illiq_mkt: ok.then(|| t.w_delta / t.w),
                ret_mkt: ok.then(|| t.w_ret / t.w),
                turnover_mkt,
                turnover_change_mkt,
            });
        }
        out
    }

    /// Regressors for `series`'s quarter. With `exclude_self` the firm's own
    /// contribution is removed on each day it contributed.
    pub fn view(&self, series: &FirmQuarterSeries, exclude_self: bool) -> FactorView {
        let range = self.quarter_range(series.quarter);
        let n = range.len();
        let mut view = FactorView {
            quarter: series.quarter,
            dates: self.dates[range.clone()].to_vec(),
            delta: Vec::with_capacity(n),
            ret: Vec::with_capacity(n),
            turnover: Vec::with_capacity(n),
        };
        let mut own = series.days.iter().peekable();
        for k in range {
            let date = self.dates[k];
            let t = self.totals[k];
            while own.next_if(|d| d.date < date).is_some() {}
            let mine = if exclude_self { own.next_if(|d| d.date == date) } else { None };
            let (n_left, w, sd, sr, st) = match mine {
                Some(d) => {
                    let wi = Self::weight_of(self.weighting, d);
                    (
                        t.n - 1,
                        t.w - wi,
                        t.w_delta - wi * d.delta_illiq,
                        t.w_ret - wi * d.ret,
                        t.w_turnover - wi * d.turnover,
                    )
                }
                None => (t.n, t.w, t.w_delta, t.w_ret, t.w_turnover),
            };
            let ok = n_left >= 2 && w > 0.0;
            view.delta.push(ok.then(|| sd / w));
            view.ret.push(ok.then(|| sr / w));
            view.turnover.push(ok.then(|| st / w));
        }
        view
    }
}

/// Debug dump of the daily aggregates.
pub fn write_market_days(path: &Path, days: &[MarketDay]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "date,n_stocks,delta_illiq_mkt,ret_mkt,turnover_mkt,turnover_change_mkt").map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for d in days {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            d.date,
            d.n_stocks,
            opt(d.delta_illiq_mkt),
            opt(d.ret_mkt),
            opt(d.turnover_mkt),
            opt(d.turnover_change_mkt)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
