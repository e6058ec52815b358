//! Sample construction: tick-regime filter, price floor, illiquidity changes,
//! tail removal and the per-quarter observation minimum, always in that order.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bars::DailyBar;
use crate::error::{Error, Result};
use crate::illiq::{amihud_daily, delta_illiq};
use crate::types::{Quarter, StockId};

/// One price band of the tick schedule; `upper_bound` is exclusive and absent for the top band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TickTier {
    #[serde(default)]
    pub upper_bound: Option<f64>,
    pub tick: f64,
}

/// Minimum tick size as a step function of price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TickSchedule {
    pub tiers: Vec<TickTier>,
}

impl Default for TickSchedule {
    /// The ASX schedule: 0.1c below 10c, 0.5c up to $2.00, 1c from $2.00.
    fn default() -> Self {
        TickSchedule {
            tiers: vec![
                TickTier {
                    upper_bound: Some(0.10),
                    tick: 0.001,
                },
                TickTier {
                    upper_bound: Some(2.00),
                    tick: 0.005,
                },
                TickTier {
                    upper_bound: None,
                    tick: 0.01,
                },
            ],
        }
    }
}

impl TickSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("tick schedule: {m}")));
        let Some((last, body)) = self.tiers.split_last() else {
            return bad("no tiers");
        };
        if last.upper_bound.is_some() {
            return bad("the last tier must be unbounded so every price is covered");
        }
        let mut prev = 0.0;
        for t in body {
            match t.upper_bound {
                Some(u) if u.is_finite() && u > prev => prev = u,
                _ => return bad("bounds must be finite, positive and strictly increasing"),
            }
        }
        if self.tiers.iter().any(|t| !(t.tick > 0.0 && t.tick.is_finite())) {
            return bad("tick sizes must be positive");
        }
        Ok(())
    }

    /// Index of the tier containing `price`.
    pub fn regime(&self, price: f64) -> usize {
        self.tiers
            .iter()
            .position(|t| t.upper_bound.is_none_or(|u| price < u))
            .unwrap_or(self.tiers.len() - 1)
    }

    pub fn tick_size(&self, price: f64) -> f64 {
        self.tiers[self.regime(price)].tick
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickDecision {
    Keep,
    Drop,
    /// No predecessor and no intraday range: kept, but the test could not run.
    Unfilterable,
}

/// Drops day `cur` when its price crossed a tick-size boundary. With intraday
/// high and low available the range decides; otherwise consecutive closes do.
pub fn tick_filter(prev: Option<&DailyBar>, cur: &DailyBar, schedule: &TickSchedule) -> TickDecision {
    let crossed = match (cur.high, cur.low, prev) {
        (Some(h), Some(l), _) => schedule.regime(h) != schedule.regime(l),
        (_, _, Some(p)) => schedule.regime(p.close) != schedule.regime(cur.close),
        _ => return TickDecision::Unfilterable,
    };
    if crossed {
        TickDecision::Drop
    } else {
        TickDecision::Keep
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinsorScope {
    #[default]
    PooledFullSample,
    PerQuarter,
}

/// How illiquidity changes bridge days on which the level is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    /// Change is taken against the nearest earlier defined day.
    #[default]
    Chain,
    /// A change needs a defined level on the immediately preceding trading day.
    Break,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_price: f64,
    pub min_obs_per_quarter: usize,
    /// Fraction removed from each tail.
    pub winsor_fraction: f64,
    pub winsor_scope: WinsorScope,
    pub tick_filter_enabled: bool,
    pub gap_policy: GapPolicy,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_price: 0.01,
            min_obs_per_quarter: 25,
            winsor_fraction: 0.01,
            winsor_scope: WinsorScope::PooledFullSample,
            tick_filter_enabled: true,
            gap_policy: GapPolicy::Chain,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.winsor_fraction) {
            return Err(Error::Config(format!(
                "winsor_fraction must lie in [0, 0.5), got {}",
                self.winsor_fraction
            )));
        }
        if self.min_obs_per_quarter < 2 {
            return Err(Error::Config("min_obs_per_quarter must be at least 2".into()));
        }
        if !(self.min_price >= 0.0 && self.min_price.is_finite()) {
            return Err(Error::Config(format!("min_price must be non-negative, got {}", self.min_price)));
        }
        Ok(())
    }
}

/// A surviving stock-day inside a firm-quarter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayObs {
    pub date: NaiveDate,
    pub delta_illiq: f64,
    pub illiq: f64,
    pub ret: f64,
    pub dollar_volume: f64,
    pub turnover: f64,
    pub market_cap: f64,
    /// Market capitalization on the previous trading day, used as aggregation weight.
    pub weight: f64,
}

impl DayObs {
    pub fn ret_sq(&self) -> f64 {
        self.ret * self.ret
    }
}

/// A day with a defined illiquidity level (after the tick and price filters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelObs {
    pub date: NaiveDate,
    pub illiq: f64,
    /// Previous trading day's market capitalization; absent on a stock's first bar.
    pub weight: Option<f64>,
}

/// Any day passing the tick and price filters, whether or not illiquidity is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradingDay {
    pub date: NaiveDate,
    pub ret: Option<f64>,
    pub turnover: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirmQuarterSeries {
    pub stock_id: StockId,
    pub quarter: Quarter,
    /// Days that survive every filter, in date order.
    pub days: Vec<DayObs>,
    pub levels: Vec<LevelObs>,
    pub trading: Vec<TradingDay>,
    /// Market cap on the last trading day of the prior quarter.
    pub lagged_market_cap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropReason {
    TickCross,
    BelowMinPrice,
    UndefinedIlliq,
    /// Illiquidity is defined but there is no earlier level to difference against.
    NoPredecessor,
    Winsorized,
    BelowMinObs,
}

impl DropReason {
    pub fn code(self) -> &'static str {
        match self {
            DropReason::TickCross => "tick_cross",
            DropReason::BelowMinPrice => "below_min_price",
            DropReason::UndefinedIlliq => "undefined_illiq",
            DropReason::NoPredecessor => "no_predecessor",
            DropReason::Winsorized => "winsorized",
            DropReason::BelowMinObs => "below_min_obs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayDrop {
    pub stock_id: StockId,
    pub date: NaiveDate,
    pub reason: DropReason,
}

#[derive(Debug, Clone)]
pub struct FirmQuarterBuild {
    pub series: Vec<FirmQuarterSeries>,
    /// Every input bar that did not end up as a surviving day, sorted by (stock, date).
    pub drops: Vec<DayDrop>,
    pub input_days: usize,
    /// First-day bars kept because the tick test had nothing to compare against.
    pub unfilterable_days: usize,
    /// Firm-quarters without a prior-quarter market cap; they stay in market aggregates only.
    pub missing_lagged_cap: Vec<(StockId, Quarter)>,
    pub warnings: Vec<String>,
}

impl FirmQuarterBuild {
    pub fn surviving_days(&self) -> usize {
        self.series.iter().map(|s| s.days.len()).sum()
    }

    pub fn drop_counts(&self) -> BTreeMap<DropReason, usize> {
        let mut m = BTreeMap::new();
        for d in &self.drops {
            *m.entry(d.reason).or_insert(0) += 1;
        }
        m
    }
}

/// A stock-day illiquidity change, the unit of tail removal.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaObs {
    pub stock_id: StockId,
    pub date: NaiveDate,
    pub delta_illiq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinsorOutcome {
    pub kept: Vec<DeltaObs>,
    pub removed: Vec<DeltaObs>,
    pub warnings: Vec<String>,
}

/// Removes the `ceil(f * N)` smallest and largest changes within each scope
/// group. Ties are ordered by (value, stock_id, date), so the result is
/// deterministic even when all values coincide.
pub fn winsorize_delta_illiq(observations: &[DeltaObs], config: &FilterConfig) -> Result<WinsorOutcome> {
    if observations.is_empty() {
        return Err(Error::InsufficientData("no observations to winsorize".into()));
    }
    config.validate()?;
    let keys: Vec<(f64, &StockId, NaiveDate)> = observations
        .iter()
        .map(|o| (o.delta_illiq, &o.stock_id, o.date))
        .collect();
    let (removed_mask, warnings) = scoped_removal_mask(&keys, config);
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (o, r) in observations.iter().zip(removed_mask) {
        if r {
            removed.push(o.clone());
        } else {
            kept.push(o.clone());
        }
    }
    Ok(WinsorOutcome {
        kept,
        removed,
        warnings,
    })
}

fn scoped_removal_mask(keys: &[(f64, &StockId, NaiveDate)], config: &FilterConfig) -> (Vec<bool>, Vec<String>) {
    let mut mask = vec![false; keys.len()];
    let mut warnings = Vec::new();
    let groups: Vec<Vec<usize>> = match config.winsor_scope {
        WinsorScope::PooledFullSample => vec![(0..keys.len()).collect()],
        WinsorScope::PerQuarter => {
            let mut g: BTreeMap<Quarter, Vec<usize>> = BTreeMap::new();
            for (i, k) in keys.iter().enumerate() {
                g.entry(Quarter::of(k.2)).or_default().push(i);
            }
            g.into_values().collect()
        }
    };
    for mut idx in groups {
        let n = idx.len();
        let f = config.winsor_fraction;
        if n == 0 || f == 0.0 {
            continue;
        }
        if (n as f64) * f < 1.0 {
            warnings.push(format!(
                "tail removal on only {n} observations (fewer than 1/f = {:.0}); one per tail still removed",
                1.0 / f
            ));
        }
        // the small offset keeps products like 0.01 * 200 from rounding up to 3
        let k = (((n as f64) * f - 1e-9).ceil().max(0.0) as usize).min(n / 2);
        idx.sort_by(|&a, &b| {
            let (va, sa, da) = keys[a];
            let (vb, sb, db) = keys[b];
            va.total_cmp(&vb).then_with(|| sa.cmp(sb)).then_with(|| da.cmp(&db))
        });
        for &i in idx.iter().take(k).chain(idx.iter().rev().take(k)) {
            mask[i] = true;
        }
    }
    (mask, warnings)
}

struct StockPass {
    candidates: Vec<DayObs>,
    levels: Vec<LevelObs>,
    trading: Vec<TradingDay>,
    drops: Vec<(NaiveDate, DropReason)>,
    quarter_end_cap: BTreeMap<Quarter, f64>,
    unfilterable: usize,
}

fn process_stock(bars: &[DailyBar], cfg: &FilterConfig, schedule: &TickSchedule) -> StockPass {
    let mut pass = StockPass {
        candidates: Vec::new(),
        levels: Vec::new(),
        trading: Vec::new(),
        drops: Vec::new(),
        quarter_end_cap: BTreeMap::new(),
        unfilterable: 0,
    };
    let mut last_level: Option<(usize, f64)> = None;
    for (i, bar) in bars.iter().enumerate() {
        pass.quarter_end_cap.insert(Quarter::of(bar.date), bar.market_cap());
        let prev = i.checked_sub(1).map(|j| &bars[j]);
        let weight = prev.map(|p| p.market_cap());

        if cfg.tick_filter_enabled {
            match tick_filter(prev, bar, schedule) {
                TickDecision::Drop => {
                    pass.drops.push((bar.date, DropReason::TickCross));
                    continue;
                }
                TickDecision::Unfilterable => pass.unfilterable += 1,
                TickDecision::Keep => {}
            }
        }
        if bar.close < cfg.min_price {
            pass.drops.push((bar.date, DropReason::BelowMinPrice));
            continue;
        }
        let turnover = bar.turnover();
        pass.trading.push(TradingDay {
            date: bar.date,
            ret: bar.ret,
            turnover,
        });

        let (Some(ret), Some(illiq)) = (bar.ret, bar.ret.and_then(|r| amihud_daily(r, bar.dollar_volume))) else {
            pass.drops.push((bar.date, DropReason::UndefinedIlliq));
            continue;
        };
        pass.levels.push(LevelObs {
            date: bar.date,
            illiq,
            weight,
        });
        let pred = match (cfg.gap_policy, last_level) {
            (GapPolicy::Chain, Some((_, l))) => Some(l),
            (GapPolicy::Break, Some((j, l))) if j + 1 == i => Some(l),
            _ => None,
        };
        last_level = Some((i, illiq));
        match pred.and_then(|p| delta_illiq(illiq, p)) {
            Some(d) => pass.candidates.push(DayObs {
                date: bar.date,
                delta_illiq: d,
                illiq,
                ret,
                dollar_volume: bar.dollar_volume,
                turnover,
                market_cap: bar.market_cap(),
                weight: weight.unwrap_or_else(|| bar.market_cap()),
            }),
            None => pass.drops.push((bar.date, DropReason::NoPredecessor)),
        }
    }
    pass
}

/// Splits bars sorted by (stock, date) into per-stock runs.
pub(crate) fn stock_runs(bars: &[DailyBar]) -> Vec<&[DailyBar]> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=bars.len() {
        if i == bars.len() || bars[i].stock_id != bars[start].stock_id {
            if i > start {
                runs.push(&bars[start..i]);
            }
            start = i;
        }
    }
    runs
}

/// Splits bars sorted by (stock, date) into per-stock, per-quarter runs.
pub(crate) fn stock_quarter_runs(bars: &[DailyBar]) -> Vec<&[DailyBar]> {
    let mut runs = Vec::new();
    for run in stock_runs(bars) {
        let mut start = 0;
        for i in 1..=run.len() {
            if i == run.len() || Quarter::of(run[i].date) != Quarter::of(run[start].date) {
                runs.push(&run[start..i]);
                start = i;
            }
        }
    }
    runs
}

/// Applies, in order: (1) tick-regime filter, (2) price floor, (3) illiquidity
/// changes with undefined days dropped, (4) tail removal, (5) per-quarter
/// observation minimum.
pub fn build_firm_quarters(
    bars: &[DailyBar],
    filters: &FilterConfig,
    schedule: &TickSchedule,
) -> Result<FirmQuarterBuild> {
    filters.validate()?;
    schedule.validate()?;
    let sorted = bars
        .windows(2)
        .all(|w| (&w[0].stock_id, w[0].date) < (&w[1].stock_id, w[1].date));
    let bars: Cow<[DailyBar]> = if sorted {
        Cow::Borrowed(bars)
    } else {
        let mut v = bars.to_vec();
        v.sort_by(|a, b| (&a.stock_id, a.date).cmp(&(&b.stock_id, b.date)));
        if let Some(w) = v.windows(2).find(|w| w[0].stock_id == w[1].stock_id && w[0].date == w[1].date) {
            return Err(Error::Config(format!(
                "duplicate bar for ({}, {})",
                w[0].stock_id, w[0].date
            )));
        }
        Cow::Owned(v)
    };

    let runs = stock_runs(&bars);
    let passes: Vec<StockPass> = runs
        .par_iter()
        .map(|run| process_stock(run, filters, schedule))
        .collect();

    // (4) tail removal across the pooled candidate set
    let mut keys: Vec<(f64, &StockId, NaiveDate)> = Vec::new();
    for (run, pass) in runs.iter().zip(&passes) {
        let id = &run[0].stock_id;
        keys.extend(pass.candidates.iter().map(|c| (c.delta_illiq, id, c.date)));
    }
    let (removed, warnings) = scoped_removal_mask(&keys, filters);
    for w in &warnings {
        log::warn!("{w}");
    }

    let mut series = Vec::new();
    let mut drops = Vec::new();
    let mut missing_lagged_cap = Vec::new();
    let mut unfilterable_days = 0;
    let mut offset = 0;
    for (run, pass) in runs.iter().zip(passes) {
        let id = &run[0].stock_id;
        unfilterable_days += pass.unfilterable;
        drops.extend(pass.drops.iter().map(|(d, r)| DayDrop {
            stock_id: id.clone(),
            date: *d,
            reason: *r,
        }));

        let mut by_quarter: BTreeMap<Quarter, Vec<DayObs>> = BTreeMap::new();
        for (j, c) in pass.candidates.iter().enumerate() {
            if removed[offset + j] {
                drops.push(DayDrop {
                    stock_id: id.clone(),
                    date: c.date,
                    reason: DropReason::Winsorized,
                });
            } else {
                by_quarter.entry(Quarter::of(c.date)).or_default().push(*c);
            }
        }
        offset += pass.candidates.len();

        // (5) observation minimum
        for (q, days) in by_quarter {
            if days.len() < filters.min_obs_per_quarter {
                drops.extend(days.iter().map(|d| DayDrop {
                    stock_id: id.clone(),
                    date: d.date,
                    reason: DropReason::BelowMinObs,
                }));
                continue;
            }
            let lagged_market_cap = pass.quarter_end_cap.get(&q.prev()).copied();
            if lagged_market_cap.is_none() {
                missing_lagged_cap.push((id.clone(), q));
            }
            series.push(FirmQuarterSeries {
                stock_id: id.clone(),
                quarter: q,
                days,
                levels: pass.levels.iter().filter(|l| Quarter::of(l.date) == q).copied().collect(),
                trading: pass.trading.iter().filter(|t| Quarter::of(t.date) == q).copied().collect(),
                lagged_market_cap,
            });
        }
    }
    drops.sort_by(|a, b| (&a.stock_id, a.date).cmp(&(&b.stock_id, b.date)));

    Ok(FirmQuarterBuild {
        series,
        drops,
        input_days: bars.len(),
        unfilterable_days,
        missing_lagged_cap,
        warnings,
    })
}

/// Writes the day-level drop report: `stock_id,date,reason_code`.
pub fn write_day_drops(path: &Path, drops: &[DayDrop]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "stock_id,date,reason_code").map_err(io)?;
    for d in drops {
        writeln!(w, "{},{},{}", d.stock_id, d.date, d.reason.code()).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bar(close: f64) -> DailyBar {
        DailyBar::new("A", NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), close, Some(0.01), 1e5, 1e6)
    }

    #[test]
    fn default_schedule_regimes() {
        let s = TickSchedule::default();
        s.validate().unwrap();
        assert_eq!(s.regime(0.095), 0);
        assert_eq!(s.regime(0.10), 1);
        assert_eq!(s.regime(1.99), 1);
        assert_eq!(s.regime(2.00), 2);
        assert_eq!(s.tick_size(50.0), 0.01);
    }

    #[test]
    fn tick_filter_examples() {
        let s = TickSchedule::default();
        assert_eq!(tick_filter(Some(&bar(0.095)), &bar(0.12), &s), TickDecision::Drop);
        assert_eq!(tick_filter(Some(&bar(1.50)), &bar(1.80), &s), TickDecision::Keep);
        assert_eq!(tick_filter(Some(&bar(1.99)), &bar(2.01), &s), TickDecision::Drop);
        assert_eq!(tick_filter(None, &bar(2.01), &s), TickDecision::Unfilterable);
    }

    #[test]
    fn intraday_range_refines_the_test() {
        let s = TickSchedule::default();
        let mut b = bar(1.95);
        b.high = Some(2.05);
        b.low = Some(1.90);
        // closes stay below $2 but the range crossed it
        assert_eq!(tick_filter(Some(&bar(1.96)), &b, &s), TickDecision::Drop);
        b.high = Some(1.99);
        assert_eq!(tick_filter(None, &b, &s), TickDecision::Keep);
    }

    #[test]
    fn bad_schedules() {
        let mut s = TickSchedule::default();
        s.tiers[1].upper_bound = Some(0.05);
        assert!(s.validate().is_err());
        let mut s = TickSchedule::default();
        s.tiers[2].upper_bound = Some(100.0);
        assert!(s.validate().is_err());
        let mut s = TickSchedule::default();
        s.tiers[0].tick = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn filter_config_bounds() {
        assert!(FilterConfig::default().validate().is_ok());
        let c = FilterConfig {
            winsor_fraction: 0.5,
            ..FilterConfig::default()
        };
        assert!(c.validate().is_err());
        let c = FilterConfig {
            min_obs_per_quarter: 1,
            ..FilterConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
