//! Stock-quarter characteristics used as lagged regressors and sort variables.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::econ::describe::{mean, sample_std};
use crate::illiq::{amihud_daily, quoted_spread_pct};
use crate::ingest::{DailyBar, IndexMembership, OwnershipPanel};
use crate::types::{OwnershipCategory, Quarter, StockId};

/// Quarter-level summary of one stock's bars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StockQuarter {
    /// Market cap on the quarter's last trading day.
    pub cap_end: f64,
    pub close_end: f64,
    pub mean_close: f64,
    pub mean_dollar_volume: f64,
    pub mean_turnover: f64,
    /// Mean daily Amihud value over days where it is defined.
    pub mean_amihud: Option<f64>,
    pub ret_std: Option<f64>,
    pub mean_spread_pct: Option<f64>,
    pub ps_illiq: Option<f64>,
    pub book_to_market: Option<f64>,
    pub dividend_yield: Option<f64>,
    pub n_days: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Characteristics {
    map: HashMap<(StockId, Quarter), StockQuarter>,
}

fn last_some(bars: &[DailyBar], f: impl Fn(&DailyBar) -> Option<f64>) -> Option<f64> {
    bars.iter().rev().find_map(f)
}

fn summarize(bars: &[DailyBar]) -> StockQuarter {
    let last = bars.last().expect("non-empty quarter");
    let closes: Vec<f64> = bars.iter().map(|b| b.close).collect();
    let dvol: Vec<f64> = bars.iter().map(|b| b.dollar_volume).collect();
    let turnover: Vec<f64> = bars.iter().map(|b| b.turnover()).collect();
    let amihud: Vec<f64> = bars
        .iter()
        .filter_map(|b| b.ret.and_then(|r| amihud_daily(r, b.dollar_volume)))
        .collect();
    let rets: Vec<f64> = bars.iter().filter_map(|b| b.ret).collect();
    let spreads: Vec<f64> = bars
        .iter()
        .filter_map(|b| quoted_spread_pct(b.quoted_spread, b.close))
        .collect();
    StockQuarter {
        cap_end: last.market_cap(),
        close_end: last.close,
        mean_close: mean(&closes).expect("non-empty"),
        mean_dollar_volume: mean(&dvol).expect("non-empty"),
        mean_turnover: mean(&turnover).expect("non-empty"),
        mean_amihud: mean(&amihud),
        ret_std: sample_std(&rets),
        mean_spread_pct: mean(&spreads),
        ps_illiq: last_some(bars, |b| b.ps_illiq),
        book_to_market: last_some(bars, |b| b.book_to_market),
        dividend_yield: last_some(bars, |b| b.dividend_yield),
        n_days: bars.len(),
    }
}

impl Characteristics {
    /// `bars` sorted by (stock, date).
    pub fn from_bars(bars: &[DailyBar]) -> Self {
        let runs = crate::ingest::stock_quarter_runs(bars);
        let entries: Vec<((StockId, Quarter), StockQuarter)> = runs
            .par_iter()
            .map(|run| {
                let key = (run[0].stock_id.clone(), Quarter::of(run[0].date));
                (key, summarize(run))
            })
            .collect();
        Characteristics {
            map: entries.into_iter().collect(),
        }
    }

    pub fn get(&self, stock: &StockId, quarter: Quarter) -> Option<&StockQuarter> {
        self.map.get(&(stock.clone(), quarter))
    }
}

/// Lagged firm characteristic usable as a cross-sectional regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    Ownership(OwnershipCategory),
    /// Log of prior-quarter-end market cap in millions.
    Size,
    /// Prior-quarter mean daily Amihud.
    Illiq,
    PsIlliq,
    QuotedSpread,
    BookToMarket,
    DividendYield,
    /// Prior-quarter standard deviation of daily returns.
    StdRet,
    /// Log price change over the prior quarter.
    PastReturn,
}

impl Regressor {
    pub fn name(self) -> &'static str {
        match self {
            Regressor::Ownership(c) => c.as_str(),
            Regressor::Size => "size",
            Regressor::Illiq => "illiq",
            Regressor::PsIlliq => "ps_illiq",
            Regressor::QuotedSpread => "quoted_spread",
            Regressor::BookToMarket => "bm",
            Regressor::DividendYield => "dy",
            Regressor::StdRet => "stdret",
            Regressor::PastReturn => "re",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regressor::Ownership(OwnershipCategory::Institution) => "Inst",
            Regressor::Ownership(OwnershipCategory::ForeignInstitution) => "Fown",
            Regressor::Ownership(OwnershipCategory::LocalInstitution) => "Lown",
            Regressor::Size => "Size",
            Regressor::Illiq => "Illiq",
            Regressor::PsIlliq => "Pastor-Stambaugh illiquidity",
            Regressor::QuotedSpread => "Percentage spread",
            Regressor::BookToMarket => "BM",
            Regressor::DividendYield => "DY",
            Regressor::StdRet => "STDRET",
            Regressor::PastReturn => "RE",
        }
    }
}

/// Everything needed to evaluate lagged regressors for a firm-quarter.
#[derive(Debug, Clone, Copy)]
pub struct RegressorSource<'a> {
    pub characteristics: &'a Characteristics,
    pub ownership: &'a OwnershipPanel,
    pub index: &'a IndexMembership,
}

impl RegressorSource<'_> {
    /// Value of `r` for `stock` in quarter `quarter`, measured over or at the end of the previous quarter.
    pub fn value(&self, r: Regressor, stock: &StockId, quarter: Quarter) -> Option<f64> {
        let prev = quarter.prev();
        let c = self.characteristics.get(stock, prev);
        match r {
            Regressor::Ownership(cat) => self.ownership.fraction(stock, prev, cat),
            Regressor::Size => c.map(|c| (c.cap_end / 1e6).ln()),
            Regressor::Illiq => c.and_then(|c| c.mean_amihud),
            Regressor::PsIlliq => c.and_then(|c| c.ps_illiq),
            Regressor::QuotedSpread => c.and_then(|c| c.mean_spread_pct),
            Regressor::BookToMarket => c.and_then(|c| c.book_to_market),
            Regressor::DividendYield => c.and_then(|c| c.dividend_yield),
            Regressor::StdRet => c.and_then(|c| c.ret_std),
            Regressor::PastReturn => {
                let before = self.characteristics.get(stock, prev.prev())?;
                c.map(|c| (c.close_end / before.close_end).ln())
            }
        }
    }
}
