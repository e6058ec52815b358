//! Loading, validation and sample construction.
//!
//! Rows that fail validation never abort a load: each one becomes a
//! [`Rejection`] carrying its file line and a machine-readable reason code.

mod bars;
mod filter;
mod membership;
mod ownership;

use std::collections::HashMap;
use std::path::Path;

use chrono::NaiveDate;

pub use bars::{fill_close_to_close_returns, load_daily_bars, write_daily_bars, BarSchema, DailyBar};
pub use filter::{
    build_firm_quarters, tick_filter, winsorize_delta_illiq, write_day_drops, DayDrop, DayObs,
    DeltaObs, DropReason, FilterConfig, FirmQuarterBuild, FirmQuarterSeries, GapPolicy, LevelObs,
    TickDecision, TickSchedule, TickTier, TradingDay, WinsorOutcome, WinsorScope,
};
pub(crate) use filter::stock_quarter_runs;
pub use membership::IndexMembership;
pub use ownership::{load_ownership, write_ownership, OwnershipPanel, OwnershipSchema, OwnershipSnapshot, SharesLookup};

use crate::error::{Error, Result};

/// Why an input row was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    ParseError,
    MissingField,
    NonPositiveClose,
    NegativeVolume,
    NonPositiveShares,
    InvalidMarketCap,
    NegativeSpread,
    InvalidRange,
    DuplicateKey,
    UnknownCategory,
    NegativeHoldings,
    UnmatchedStock,
    FractionAboveOne,
    CategoryInconsistent,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::ParseError => "parse_error",
            RejectReason::MissingField => "missing_field",
            RejectReason::NonPositiveClose => "non_positive_close",
            RejectReason::NegativeVolume => "negative_volume",
            RejectReason::NonPositiveShares => "non_positive_shares",
            RejectReason::InvalidMarketCap => "invalid_market_cap",
            RejectReason::NegativeSpread => "negative_spread",
            RejectReason::InvalidRange => "invalid_high_low",
            RejectReason::DuplicateKey => "duplicate_key",
            RejectReason::UnknownCategory => "unknown_category",
            RejectReason::NegativeHoldings => "negative_holdings",
            RejectReason::UnmatchedStock => "unmatched_stock",
            RejectReason::FractionAboveOne => "fraction_above_one",
            RejectReason::CategoryInconsistent => "category_inconsistent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// 1-based line in the source file (the header is line 1).
    pub line: u64,
    pub reason: RejectReason,
    pub detail: String,
}

impl Rejection {
    pub fn new(line: u64, reason: RejectReason, detail: impl Into<String>) -> Self {
        Rejection {
            line,
            reason,
            detail: detail.into(),
        }
    }
}

/// Accepted records plus the rows that were turned away.
#[derive(Debug, Clone)]
pub struct LoadOutcome<T> {
    pub records: Vec<T>,
    pub rejections: Vec<Rejection>,
    /// Data rows read, excluding the header.
    pub rows_read: usize,
}

/// Writes a rejection report with columns `line,reason_code,detail`.
pub fn write_rejections(path: &Path, rejections: &[Rejection]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["line", "reason_code", "detail"])?;
    for r in rejections {
        w.write_record([r.line.to_string().as_str(), r.reason.code(), r.detail.as_str()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) struct HeaderMap {
    index: HashMap<String, usize>,
    len: usize,
}

impl HeaderMap {
    pub(crate) fn new(header: &csv::StringRecord) -> Self {
        let mut index = HashMap::new();
        for (i, h) in header.iter().enumerate() {
            // keep the first occurrence of a repeated name
            index.entry(h.trim().to_string()).or_insert(i);
        }
        HeaderMap {
            index,
            len: header.len(),
        }
    }

    pub(crate) fn required(&self, name: &str) -> Result<usize> {
        self.optional(name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
        })
    }

    pub(crate) fn optional(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }
}

pub(crate) fn parse_date(raw: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| format!("date {raw:?} is not ISO-8601 (YYYY-MM-DD)"))
}
