//! Ownership snapshots: loading, joining to shares outstanding, and quarter-end lookup.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::bars::{map_open_error, DailyBar};
use super::{parse_date, HeaderMap, LoadOutcome, RejectReason, Rejection};
use crate::error::{Error, Result};
use crate::types::{OwnershipCategory, Quarter, StockId};

/// Holdings of one investor category in one stock on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct OwnershipSnapshot {
    pub stock_id: StockId,
    pub date: NaiveDate,
    pub category: OwnershipCategory,
    pub shares_held: f64,
    /// `shares_held / shares_outstanding`, filled when joined to bars.
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OwnershipSchema {
    pub stock_id: String,
    pub date: String,
    pub category: String,
    pub shares_held: String,
    pub lenient_duplicates: bool,
}

impl Default for OwnershipSchema {
    fn default() -> Self {
        OwnershipSchema {
            stock_id: "stock_id".into(),
            date: "date".into(),
            category: "category".into(),
            shares_held: "shares_held".into(),
            lenient_duplicates: false,
        }
    }
}

/// Shares outstanding per stock, looked up on or before a date.
#[derive(Debug, Default, Clone)]
pub struct SharesLookup {
    by_stock: HashMap<StockId, Vec<(NaiveDate, f64)>>,
}

impl SharesLookup {
    /// `bars` must be sorted by (stock, date), as returned by the loader.
    pub fn from_bars(bars: &[DailyBar]) -> Self {
        let mut by_stock: HashMap<StockId, Vec<(NaiveDate, f64)>> = HashMap::new();
        for b in bars {
            by_stock
                .entry(b.stock_id.clone())
                .or_default()
                .push((b.date, b.shares_outstanding));
        }
        SharesLookup { by_stock }
    }

    pub fn shares_on_or_before(&self, stock: &StockId, date: NaiveDate) -> Option<f64> {
        let v = self.by_stock.get(stock)?;
        let pos = v.partition_point(|(d, _)| *d <= date);
        (pos > 0).then(|| v[pos - 1].1)
    }
}

// Foreign plus local may exceed the institution total by at most this many shares.
const CONSISTENCY_TOLERANCE: f64 = 1.0;

/// Loads ownership snapshots. With `shares` supplied, fractions are computed and
/// rows whose fraction exceeds one, or whose stock has no bar on or before the
/// date, are rejected.
pub fn load_ownership(
    path: &Path,
    schema: &OwnershipSchema,
    shares: Option<&SharesLookup>,
) -> Result<LoadOutcome<OwnershipSnapshot>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| map_open_error(path, e))?;
    let header = HeaderMap::new(reader.headers()?);
    let c_stock = header.required(&schema.stock_id)?;
    let c_date = header.required(&schema.date)?;
    let c_cat = header.required(&schema.category)?;
    let c_held = header.required(&schema.shares_held)?;
    let n_cols = header.len();

    let mut rows: Vec<(u64, OwnershipSnapshot)> = Vec::new();
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
        let get = |i: usize| rec.get(i).unwrap_or("");
        let parsed = (|| -> Result<OwnershipSnapshot, (RejectReason, String)> {
            let id = get(c_stock);
            if id.is_empty() {
                return Err((RejectReason::MissingField, "`stock_id` is empty".into()));
            }
            let date = parse_date(get(c_date)).map_err(|d| (RejectReason::ParseError, d))?;
            let category: OwnershipCategory = get(c_cat)
                .parse()
                .map_err(|_| (RejectReason::UnknownCategory, format!("category {:?}", get(c_cat))))?;
            let held: f64 = get(c_held)
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| (RejectReason::ParseError, format!("`shares_held` = {:?}", get(c_held))))?;
            if held < 0.0 {
                return Err((RejectReason::NegativeHoldings, format!("shares_held = {held}")));
            }
            Ok(OwnershipSnapshot {
                stock_id: StockId::new(id),
                date,
                category,
                shares_held: held,
                fraction: None,
            })
        })();
        match parsed {
            Ok(s) => rows.push((line, s)),
            Err((reason, detail)) => rejections.push(Rejection::new(line, reason, detail)),
        }
    }

    let rows = validate_snapshots(rows, schema.lenient_duplicates, shares, &mut rejections);
    let mut records: Vec<OwnershipSnapshot> = rows.into_iter().map(|(_, s)| s).collect();
    records.sort_by(|a, b| (&a.stock_id, a.date, a.category).cmp(&(&b.stock_id, b.date, b.category)));
    rejections.sort_by_key(|r| r.line);
    Ok(LoadOutcome {
        records,
        rejections,
        rows_read,
    })
}

/// Duplicate, fraction and category-consistency checks on parsed rows.
pub(crate) fn validate_snapshots(
    rows: Vec<(u64, OwnershipSnapshot)>,
    lenient: bool,
    shares: Option<&SharesLookup>,
    rejections: &mut Vec<Rejection>,
) -> Vec<(u64, OwnershipSnapshot)> {
    // duplicates on (stock, date, category)
    let mut by_key: HashMap<(StockId, NaiveDate, OwnershipCategory), Vec<usize>> = HashMap::new();
    for (i, (_, s)) in rows.iter().enumerate() {
        by_key
            .entry((s.stock_id.clone(), s.date, s.category))
            .or_default()
            .push(i);
    }
    let mut keep = vec![true; rows.len()];
    for idx in by_key.values().filter(|v| v.len() > 1) {
        for (n, &i) in idx.iter().enumerate() {
            if lenient && n == 0 {
                continue;
            }
            keep[i] = false;
            let (line, s) = &rows[i];
            rejections.push(Rejection::new(
                *line,
                RejectReason::DuplicateKey,
                format!("({}, {}, {}) repeated", s.stock_id, s.date, s.category),
            ));
        }
    }
    let mut rows: Vec<(u64, OwnershipSnapshot)> = rows
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect();

    if let Some(lookup) = shares {
        rows.retain_mut(|(line, s)| match lookup.shares_on_or_before(&s.stock_id, s.date) {
            None => {
                rejections.push(Rejection::new(
                    *line,
                    RejectReason::UnmatchedStock,
                    format!("no bar for {} on or before {}", s.stock_id, s.date),
                ));
                false
            }
            Some(out) => {
                let f = s.shares_held / out;
                if f > 1.0 {
                    rejections.push(Rejection::new(
                        *line,
                        RejectReason::FractionAboveOne,
                        format!("{} of {} shares outstanding", s.shares_held, out),
                    ));
                    false
                } else {
                    s.fraction = Some(f);
                    true
                }
            }
        });
    }

    // foreign + local must not exceed the institution total
    let mut groups: HashMap<(StockId, NaiveDate), [Option<usize>; 3]> = HashMap::new();
    for (i, (_, s)) in rows.iter().enumerate() {
        let slot = match s.category {
            OwnershipCategory::Institution => 0,
            OwnershipCategory::ForeignInstitution => 1,
            OwnershipCategory::LocalInstitution => 2,
        };
        groups.entry((s.stock_id.clone(), s.date)).or_default()[slot] = Some(i);
    }
    let mut bad = vec![false; rows.len()];
    for slots in groups.values() {
        let Some(inst) = slots[0] else { continue };
        let sub: f64 = slots[1..].iter().flatten().map(|&i| rows[i].1.shares_held).sum();
        if sub > rows[inst].1.shares_held + CONSISTENCY_TOLERANCE {
            for &i in slots.iter().flatten() {
                bad[i] = true;
            }
        }
    }
    let mut out = Vec::with_capacity(rows.len());
    for ((line, s), b) in rows.into_iter().zip(bad) {
        if b {
            rejections.push(Rejection::new(
                line,
                RejectReason::CategoryInconsistent,
                format!(
                    "foreign + local exceed institution holdings for {} on {}",
                    s.stock_id, s.date
                ),
            ));
        } else {
            out.push((line, s));
        }
    }
    out
}

/// Ownership fraction per (stock, quarter, category), taken from the last
/// snapshot dated inside the quarter.
#[derive(Debug, Default, Clone)]
pub struct OwnershipPanel {
    fractions: BTreeMap<(StockId, Quarter, OwnershipCategory), (NaiveDate, f64)>,
}

impl OwnershipPanel {
    /// Snapshots without a joined fraction are ignored.
    pub fn from_snapshots(snapshots: &[OwnershipSnapshot]) -> Self {
        let mut fractions: BTreeMap<(StockId, Quarter, OwnershipCategory), (NaiveDate, f64)> =
            BTreeMap::new();
        for s in snapshots {
            let Some(f) = s.fraction else { continue };
            let key = (s.stock_id.clone(), Quarter::of(s.date), s.category);
            match fractions.get(&key) {
                Some((d, _)) if *d >= s.date => {}
                _ => {
                    fractions.insert(key, (s.date, f));
                }
            }
        }
        OwnershipPanel { fractions }
    }

    /// Fraction held at the end of `quarter`.
    pub fn fraction(&self, stock: &StockId, quarter: Quarter, category: OwnershipCategory) -> Option<f64> {
        self.fractions
            .get(&(stock.clone(), quarter, category))
            .map(|(_, f)| *f)
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    /// All (stock, quarter, category, fraction) entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&StockId, Quarter, OwnershipCategory, f64)> {
        self.fractions.iter().map(|((s, q, c), (_, f))| (s, *q, *c, *f))
    }
}

pub fn write_ownership(path: &Path, snapshots: &[OwnershipSnapshot]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "stock_id,date,category,shares_held").map_err(io)?;
    for s in snapshots {
        writeln!(w, "{},{},{},{}", s.stock_id, s.date, s.category.as_str(), s.shares_held).map_err(io)?;
    }
    w.flush().map_err(io)
}
