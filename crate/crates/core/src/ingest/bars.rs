//! Daily bar CSV loading and validation.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{parse_date, HeaderMap, LoadOutcome, RejectReason, Rejection};
use crate::error::{Error, Result};
use crate::illiq::turnover_daily;
use crate::types::StockId;

/// One stock-day market observation.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyBar {
    pub stock_id: StockId,
    pub date: NaiveDate,
    pub close: f64,
    /// Simple return; `None` on a stock's first day when computed from closes.
    pub ret: Option<f64>,
    pub dollar_volume: f64,
    pub shares_outstanding: f64,
    /// Share volume, when supplied; otherwise derived as dollar volume over close.
    pub volume: Option<f64>,
    pub quoted_spread: Option<f64>,
    pub high: Option<f64>,
    pub low: Option<f64>,
    pub ps_illiq: Option<f64>,
    pub book_to_market: Option<f64>,
    pub dividend_yield: Option<f64>,
}

impl DailyBar {
    /// Bar with only the required fields set.
    pub fn new(
        stock_id: impl Into<StockId>,
        date: NaiveDate,
        close: f64,
        ret: Option<f64>,
        dollar_volume: f64,
        shares_outstanding: f64,
    ) -> Self {
        DailyBar {
            stock_id: stock_id.into(),
            date,
            close,
            ret,
            dollar_volume,
            shares_outstanding,
            volume: None,
            quoted_spread: None,
            high: None,
            low: None,
            ps_illiq: None,
            book_to_market: None,
            dividend_yield: None,
        }
    }

    pub fn market_cap(&self) -> f64 {
        self.close * self.shares_outstanding
    }

    pub fn share_volume(&self) -> f64 {
        self.volume.unwrap_or(self.dollar_volume / self.close)
    }

    pub fn turnover(&self) -> f64 {
        turnover_daily(self.share_volume(), self.shares_outstanding)
    }
}

impl From<String> for StockId {
    fn from(s: String) -> Self {
        StockId(s)
    }
}

/// Column names for the bar file. Optional columns are used when present in the header.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarSchema {
    pub stock_id: String,
    pub date: String,
    pub close: String,
    pub dollar_volume: String,
    pub shares_outstanding: String,
    pub ret: String,
    pub volume: String,
    pub quoted_spread: String,
    pub high: String,
    pub low: String,
    pub ps_illiq: String,
    pub book_to_market: String,
    pub dividend_yield: String,
    /// Lenient mode keeps the first of duplicate (stock, date) rows instead of rejecting all.
    pub lenient_duplicates: bool,
}

impl Default for BarSchema {
    fn default() -> Self {
        BarSchema {
            stock_id: "stock_id".into(),
            date: "date".into(),
            close: "close".into(),
            dollar_volume: "dollar_volume".into(),
            shares_outstanding: "shares_outstanding".into(),
            ret: "ret".into(),
            volume: "volume".into(),
            quoted_spread: "quoted_spread".into(),
            high: "high".into(),
            low: "low".into(),
            ps_illiq: "ps_illiq".into(),
            book_to_market: "book_to_market".into(),
            dividend_yield: "dividend_yield".into(),
            lenient_duplicates: false,
        }
    }
}

struct BarColumns {
    stock_id: usize,
    date: usize,
    close: usize,
    dollar_volume: usize,
    shares_outstanding: usize,
    ret: Option<usize>,
    volume: Option<usize>,
    quoted_spread: Option<usize>,
    high: Option<usize>,
    low: Option<usize>,
    ps_illiq: Option<usize>,
    book_to_market: Option<usize>,
    dividend_yield: Option<usize>,
}

impl BarColumns {
    fn resolve(h: &HeaderMap, s: &BarSchema) -> Result<Self> {
        Ok(BarColumns {
            stock_id: h.required(&s.stock_id)?,
            date: h.required(&s.date)?,
            close: h.required(&s.close)?,
            dollar_volume: h.required(&s.dollar_volume)?,
            shares_outstanding: h.required(&s.shares_outstanding)?,
            ret: h.optional(&s.ret),
            volume: h.optional(&s.volume),
            quoted_spread: h.optional(&s.quoted_spread),
            high: h.optional(&s.high),
            low: h.optional(&s.low),
            ps_illiq: h.optional(&s.ps_illiq),
            book_to_market: h.optional(&s.book_to_market),
            dividend_yield: h.optional(&s.dividend_yield),
        })
    }
}

fn field(rec: &csv::StringRecord, idx: usize) -> &str {
    rec.get(idx).unwrap_or("")
}

fn required_number(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, (RejectReason, String)> {
    let raw = field(rec, idx);
    if raw.is_empty() {
        return Err((RejectReason::MissingField, format!("`{name}` is empty")));
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err((RejectReason::ParseError, format!("`{name}` = {raw:?} is not a finite number"))),
    }
}

fn optional_number(
    rec: &csv::StringRecord,
    idx: Option<usize>,
    name: &str,
) -> Result<Option<f64>, (RejectReason, String)> {
    let Some(idx) = idx else { return Ok(None) };
    let raw = field(rec, idx);
    if raw.is_empty() {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err((RejectReason::ParseError, format!("`{name}` = {raw:?} is not a finite number"))),
    }
}

fn parse_bar(rec: &csv::StringRecord, c: &BarColumns) -> Result<DailyBar, (RejectReason, String)> {
    let id = field(rec, c.stock_id);
    if id.is_empty() {
        return Err((RejectReason::MissingField, "`stock_id` is empty".into()));
    }
    let date = parse_date(field(rec, c.date)).map_err(|d| (RejectReason::ParseError, d))?;
    let close = required_number(rec, c.close, "close")?;
    let dollar_volume = required_number(rec, c.dollar_volume, "dollar_volume")?;
    let shares_outstanding = required_number(rec, c.shares_outstanding, "shares_outstanding")?;
    let bar = DailyBar {
        stock_id: StockId::new(id),
        date,
        close,
        ret: optional_number(rec, c.ret, "ret")?,
        dollar_volume,
        shares_outstanding,
        volume: optional_number(rec, c.volume, "volume")?,
        quoted_spread: optional_number(rec, c.quoted_spread, "quoted_spread")?,
        high: optional_number(rec, c.high, "high")?,
        low: optional_number(rec, c.low, "low")?,
        ps_illiq: optional_number(rec, c.ps_illiq, "ps_illiq")?,
        book_to_market: optional_number(rec, c.book_to_market, "book_to_market")?,
        dividend_yield: optional_number(rec, c.dividend_yield, "dividend_yield")?,
    };
    validate_bar(&bar)?;
    Ok(bar)
}

fn validate_bar(b: &DailyBar) -> Result<(), (RejectReason, String)> {
    if b.close <= 0.0 {
        return Err((RejectReason::NonPositiveClose, format!("close = {}", b.close)));
    }
    if b.dollar_volume < 0.0 {
        return Err((RejectReason::NegativeVolume, format!("dollar_volume = {}", b.dollar_volume)));
    }
    if b.shares_outstanding <= 0.0 {
        return Err((
            RejectReason::NonPositiveShares,
            format!("shares_outstanding = {}", b.shares_outstanding),
        ));
    }
    let cap = b.market_cap();
    if !cap.is_finite() || cap <= 0.0 {
        return Err((RejectReason::InvalidMarketCap, format!("market cap = {cap}")));
    }
    if let Some(v) = b.volume {
        if v < 0.0 {
            return Err((RejectReason::NegativeVolume, format!("volume = {v}")));
        }
    }
    if let Some(s) = b.quoted_spread {
        if s < 0.0 {
            return Err((RejectReason::NegativeSpread, format!("quoted_spread = {s}")));
        }
    }
    if let (Some(h), Some(l)) = (b.high, b.low) {
        if l <= 0.0 || h < l {
            return Err((RejectReason::InvalidRange, format!("high = {h}, low = {l}")));
        }
    }
    Ok(())
}

/// Loads and validates a bar CSV. Output is sorted by (stock_id, date).
///
/// When the file has no return column, simple close-to-close returns are
/// computed per stock; the first bar of each stock then has no return.
pub fn load_daily_bars(path: &Path, schema: &BarSchema) -> Result<LoadOutcome<DailyBar>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| map_open_error(path, e))?;
    let header = HeaderMap::new(reader.headers()?);
    let cols = BarColumns::resolve(&header, schema)?;
    let n_cols = header.len();

    let mut parsed: Vec<(u64, DailyBar)> = Vec::new();
    let mut rejections = Vec::new();
    let mut rows_read = 0;
    for rec in reader.records() {
        let rec = rec?;
        rows_read += 1;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != n_cols {
            rejections.push(Rejection::new(
                line,
                RejectReason::ParseError,
                format!("expected {n_cols} fields, found {}", rec.len()),
            ));
            continue;
        }
        match parse_bar(&rec, &cols) {
            Ok(bar) => parsed.push((line, bar)),
            Err((reason, detail)) => rejections.push(Rejection::new(line, reason, detail)),
        }
    }

    let mut bars = resolve_duplicates(parsed, schema.lenient_duplicates, &mut rejections);
    bars.sort_by(|a, b| (&a.stock_id, a.date).cmp(&(&b.stock_id, b.date)));
    if cols.ret.is_none() {
        fill_close_to_close_returns(&mut bars);
    }
    rejections.sort_by_key(|r| r.line);
    Ok(LoadOutcome {
        records: bars,
        rejections,
        rows_read,
    })
}

pub(crate) fn map_open_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("cannot read {}: {other:?}", path.display())),
    }
}

fn resolve_duplicates(
    parsed: Vec<(u64, DailyBar)>,
    lenient: bool,
    rejections: &mut Vec<Rejection>,
) -> Vec<DailyBar> {
    let mut by_key: HashMap<(StockId, NaiveDate), Vec<usize>> = HashMap::new();
    for (i, (_, b)) in parsed.iter().enumerate() {
        by_key.entry((b.stock_id.clone(), b.date)).or_default().push(i);
    }
    let mut keep = vec![true; parsed.len()];
    for idx in by_key.values().filter(|v| v.len() > 1) {
        let first_line = parsed[idx[0]].0;
        for (n, &i) in idx.iter().enumerate() {
            if lenient && n == 0 {
                continue;
            }
            keep[i] = false;
            let (line, b) = &parsed[i];
            let detail = if lenient {
                format!("duplicate of line {first_line} for ({}, {})", b.stock_id, b.date)
            } else {
                format!("({}, {}) appears {} times", b.stock_id, b.date, idx.len())
            };
            rejections.push(Rejection::new(*line, RejectReason::DuplicateKey, detail));
        }
    }
    parsed
        .into_iter()
        .zip(keep)
        .filter_map(|((_, b), k)| k.then_some(b))
        .collect()
}

/// Computes simple returns from consecutive closes; bars must be sorted by (stock, date).
pub fn fill_close_to_close_returns(bars: &mut [DailyBar]) {
    for i in 0..bars.len() {
        bars[i].ret = if i > 0 && bars[i - 1].stock_id == bars[i].stock_id {
            Some(bars[i].close / bars[i - 1].close - 1.0)
        } else {
            None
        };
    }
}

/// Writes bars in the default schema; floats use shortest round-trip formatting.
pub fn write_daily_bars(path: &Path, bars: &[DailyBar]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(
        w,
        "stock_id,date,close,ret,dollar_volume,shares_outstanding,volume,quoted_spread,high,low,ps_illiq,book_to_market,dividend_yield"
    )
    .map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for b in bars {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            b.stock_id,
            b.date,
            b.close,
            opt(b.ret),
            b.dollar_volume,
            b.shares_outstanding,
            opt(b.volume),
            opt(b.quoted_spread),
            opt(b.high),
            opt(b.low),
            opt(b.ps_illiq),
            opt(b.book_to_market),
            opt(b.dividend_yield),
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
