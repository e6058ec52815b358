//! Summary, sort and time-series tables plus the figure series.

use std::collections::BTreeMap;

use chrono::Datelike;

use super::characteristics::{Regressor, RegressorSource};
use super::fm::group_label;
use super::report::{FigureSeries, ReportTable};
use super::sorts::{nested_sort_assign, sort_assign, SizeGroups};
use crate::commonality::{AnnualBetaRow, BetaEstimate};
use crate::econ::describe::{mean, median, min_max, quantile, sample_std, welch_t};
use crate::econ::{dickey_fuller, trend_regression, DfOutcome};
use crate::illiq::MarketDay;
use crate::ingest::FirmQuarterSeries;
use crate::types::{OwnershipCategory, Quarter, SizeGroup, StockId};

/// Precomputed panels shared by the report builders.
#[derive(Debug, Clone, Copy)]
pub struct AnalysisInputs<'a> {
    pub series: &'a [FirmQuarterSeries],
    pub market_days: &'a [MarketDay],
    pub estimates: &'a [BetaEstimate],
    pub source: RegressorSource<'a>,
    pub size_groups: &'a SizeGroups,
    /// Category whose top decile forms the high-ownership portfolio.
    pub hi_category: OwnershipCategory,
    pub nw_lags: usize,
}

const GROUPS: [Option<SizeGroup>; 4] = [None, Some(SizeGroup::Large), Some(SizeGroup::Mid), Some(SizeGroup::Small)];

fn key(stock: &StockId, q: Quarter) -> (StockId, Quarter) {
    (stock.clone(), q)
}

/// Pushes mean/median/std/min/max rows for `values` into one column.
fn push_moments(t: &mut ReportTable, panel: &str, var: &str, col: &str, values: &[f64], prov: &str) {
    let (lo, hi) = min_max(values).unzip();
    let stats = [
        ("Mean", mean(values)),
        ("Median", median(values)),
        ("Std", sample_std(values)),
        ("Min", lo),
        ("Max", hi),
    ];
    for (s, v) in stats {
        t.push(panel, &format!("{var} {s}"), col, v, None, prov);
    }
}

/// Size, price, trading volume and ownership of the sample firm-quarters by size tercile.
pub fn summary_stats(inputs: &AnalysisInputs<'_>) -> ReportTable {
    let prov = "summary_stats";
    let mut t = ReportTable::new("table1", "Summary statistics");
    let chars = inputs.source.characteristics;
    let mut vals: BTreeMap<(Option<SizeGroup>, &str), Vec<f64>> = BTreeMap::new();
    for s in inputs.series {
        let Some(&g) = inputs.size_groups.get(&key(&s.stock_id, s.quarter)) else { continue };
        let Some(c) = chars.get(&s.stock_id, s.quarter) else { continue };
        let cap = s.lagged_market_cap.expect("size groups require a lagged cap");
        let mut add = |var: &'static str, v: f64| {
            vals.entry((None, var)).or_default().push(v);
            vals.entry((Some(g), var)).or_default().push(v);
        };
        add("Size ($m)", cap / 1e6);
        add("Price ($)", c.mean_close);
        add("Dollar volume ($k)", c.mean_dollar_volume / 1e3);
        for cat in OwnershipCategory::ALL {
            if let Some(f) = inputs.source.value(Regressor::Ownership(cat), &s.stock_id, s.quarter) {
                add(cat.label(), 100.0 * f);
            }
        }
    }
    for var in ["Size ($m)", "Price ($)", "Dollar volume ($k)"] {
        for g in GROUPS {
            let v = vals.get(&(g, var)).map_or(&[][..], Vec::as_slice);
            push_moments(&mut t, "Panel A: firm characteristics", var, group_label(g), v, prov);
        }
    }
    for cat in OwnershipCategory::ALL {
        for g in GROUPS {
            let v = vals.get(&(g, cat.label())).map_or(&[][..], Vec::as_slice);
            let panel = "Panel B: ownership (% of shares outstanding)";
            let var = cat.label();
            t.push(panel, &format!("{var} Mean"), group_label(g), mean(v), None, prov);
            t.push(panel, &format!("{var} Median"), group_label(g), median(v), None, prov);
            t.push(panel, &format!("{var} Std"), group_label(g), sample_std(v), None, prov);
        }
    }
    holdings_panel(&mut t, inputs.source);
    t
}

/// Average ownership and aggregate dollar holdings in the first and last year of ownership data.
fn holdings_panel(t: &mut ReportTable, source: RegressorSource<'_>) {
    let prov = "summary_stats";
    let panel = "Panel C: holdings, first vs last year";
    // (year, category, stock) -> latest quarter and fraction
    let mut latest: BTreeMap<(i32, OwnershipCategory, &StockId), (Quarter, f64)> = BTreeMap::new();
    for (stock, q, cat, f) in source.ownership.iter() {
        let year = q.first_day().year();
        let e = latest.entry((year, cat, stock)).or_insert((q, f));
        if q >= e.0 {
            *e = (q, f);
        }
    }
    let years: Vec<i32> = latest.keys().map(|k| k.0).collect();
    let (Some(&first), Some(&last)) = (years.iter().min(), years.iter().max()) else {
        t.note("no ownership data for Panel C");
        return;
    };
    for cat in OwnershipCategory::ALL {
        let summary = |year: i32| {
            let mut fracs = Vec::new();
            let mut dollars = 0.0;
            for ((_, _, stock), (q, f)) in latest.iter().filter(|(k, _)| k.0 == year && k.1 == cat) {
                fracs.push(100.0 * f);
                if let Some(c) = source.characteristics.get(stock, *q) {
                    dollars += f * c.cap_end;
                }
            }
            (mean(&fracs), dollars / 1e9)
        };
        let (p0, d0) = summary(first);
        let (p1, d1) = summary(last);
        let avg = format!("{} avg %", cat.label());
        let hold = format!("{} holdings ($bn)", cat.label());
        t.push(panel, &avg, &first.to_string(), p0, None, prov);
        t.push(panel, &avg, &last.to_string(), p1, None, prov);
        t.push(panel, &avg, "Change", p0.zip(p1).map(|(a, b)| b - a), None, prov);
        t.push(panel, &hold, &first.to_string(), Some(d0), None, prov);
        t.push(panel, &hold, &last.to_string(), Some(d1), None, prov);
        t.push(panel, &hold, "Change", Some(d1 - d0), None, prov);
    }
}

/// Annual cross-sectional means of firm-year average liquidity betas.
pub fn annual_beta_table(rows: &[AnnualBetaRow]) -> ReportTable {
    let prov = "annual_beta_means";
    let mut t = ReportTable::new("table2", "Annual means of liquidity betas");
    for r in rows {
        let year = r.year.to_string();
        for g in [None, Some(SizeGroup::Large), Some(SizeGroup::Small)] {
            let col = group_label(g);
            let s = r.groups.get(&g);
            t.push("", &year, col, s.map(|s| s.mean), s.and_then(|s| s.t_stat), prov);
            t.push("", &year, &format!("{col} %pos"), s.map(|s| s.pct_positive), None, prov);
        }
        let (d, dt) = r.large_minus_small.unzip();
        t.push("", &year, "Large-Small", d, dt.flatten(), prov);
    }
    t
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    n: usize,
    n_pos: usize,
}

impl Moments {
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
        self.n_pos += usize::from(v > 0.0);
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }
}

fn quarterly_group_means(
    estimates: &[BetaEstimate],
    size_groups: &SizeGroups,
    value: impl Fn(&BetaEstimate) -> Option<f64>,
) -> BTreeMap<Quarter, BTreeMap<Option<SizeGroup>, Moments>> {
    let mut out: BTreeMap<Quarter, BTreeMap<Option<SizeGroup>, Moments>> = BTreeMap::new();
    for e in estimates {
        let Some(v) = value(e) else { continue };
        let q = out.entry(e.quarter).or_default();
        q.entry(None).or_default().add(v);
        if let Some(&g) = size_groups.get(&key(&e.stock_id, e.quarter)) {
            q.entry(Some(g)).or_default().add(v);
        }
    }
    out
}

/// Quarterly mean beta_L of large and small firms over quarters where both exist.
pub fn large_small_series(estimates: &[BetaEstimate], size_groups: &SizeGroups) -> Vec<(Quarter, f64, f64)> {
    quarterly_group_means(estimates, size_groups, |e| Some(e.beta_l))
        .into_iter()
        .filter_map(|(q, m)| {
            let l = m.get(&Some(SizeGroup::Large))?;
            let s = m.get(&Some(SizeGroup::Small))?;
            Some((q, l.mean(), s.mean()))
        })
        .collect()
}

/// Unit-root and deterministic-trend tests on quarterly mean liquidity betas.
pub fn beta_trend_table(estimates: &[BetaEstimate], size_groups: &SizeGroups, nw_lags: usize) -> ReportTable {
    let mut t = ReportTable::new("table3", "Unit root and trend tests on quarterly mean liquidity betas");
    let ls = large_small_series(estimates, size_groups);
    let series: [(&str, Vec<f64>); 3] = [
        ("Large", ls.iter().map(|x| x.1).collect()),
        ("Small", ls.iter().map(|x| x.2).collect()),
        ("Large-Small", ls.iter().map(|x| x.1 - x.2).collect()),
    ];
    let ur = "Unit root (constant and trend)";
    for (col, s) in &series {
        match dickey_fuller(s, true) {
            Ok(DfOutcome::Statistic(df)) => {
                let p = "dickey_fuller";
                t.push(ur, "rho", col, Some(df.rho), None, p);
                t.push(ur, "rho-1", col, Some(df.rho - 1.0), None, p);
                t.push(ur, "DF statistic", col, Some(df.statistic), None, p);
                t.push(ur, "5% critical value", col, Some(df.critical_values[1]), None, p);
                t.push(ur, "Reject unit root", col, Some(f64::from(u8::from(df.reject_at_5pct))), None, p);
            }
            Ok(DfOutcome::Degenerate { reason }) => {
                t.push(ur, "rho", col, None, None, "dickey_fuller");
                t.note(format!("{col}: unit root test degenerate ({reason})"));
            }
            Err(e) => {
                t.push(ur, "rho", col, None, None, "dickey_fuller");
                t.note(format!("{col}: unit root test skipped ({e})"));
            }
        }
        let tr = "Trend regression";
        match trend_regression(s, nw_lags) {
            Ok(fit) => {
                t.push(tr, "Intercept", col, Some(fit.coefficients[0]), Some(fit.t_stats[0]), "trend_regression");
                t.push(tr, "Trend", col, Some(fit.coefficients[1]), Some(fit.t_stats[1]), "trend_regression");
            }
            Err(e) => {
                t.push(tr, "Intercept", col, None, None, "trend_regression");
                t.note(format!("{col}: trend regression skipped ({e})"));
            }
        }
    }
    t
}

/// Quintile sort of sample firm-quarters on prior-quarter-end ownership,
/// returning (quintile, value) pairs. Quarters are sorted separately.
fn ownership_quintiles(
    items: &[(StockId, Quarter, f64, f64)],
    n_buckets: usize,
) -> Vec<(usize, f64)> {
    let mut by_q: BTreeMap<Quarter, Vec<&(StockId, Quarter, f64, f64)>> = BTreeMap::new();
    for it in items {
        by_q.entry(it.1).or_default().push(it);
    }
    let mut out = Vec::new();
    for (_, xs) in by_q {
        let cs: Vec<(&StockId, f64)> = xs.iter().map(|x| (&x.0, x.2)).collect();
        let labels = sort_assign(&cs, n_buckets).expect("finite ownership fractions");
        out.extend(labels.into_iter().zip(xs.iter().map(|x| x.3)));
    }
    out
}

/// Bucket means plus a Hi-Lo row with a Welch t-statistic.
fn push_bucket_rows(t: &mut ReportTable, panel: &str, col: &str, buckets: &[(usize, f64)], n: usize, prov: &str) {
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (b, v) in buckets {
        per[b - 1].push(*v);
    }
    for (i, v) in per.iter().enumerate() {
        let row = match i {
            0 => "Q1 (Lo)".to_string(),
            i if i + 1 == n => format!("Q{n} (Hi)"),
            i => format!("Q{}", i + 1),
        };
        t.push(panel, &row, col, mean(v), None, prov);
    }
    let diff = mean(&per[n - 1]).zip(mean(&per[0])).map(|(h, l)| h - l);
    t.push(panel, "Hi-Lo", col, diff, welch_t(&per[n - 1], &per[0]), prov);
}

/// Turnover across ownership quintiles, ownership-weighted holding periods and index membership.
pub fn turnover_by_ownership(inputs: &AnalysisInputs<'_>) -> ReportTable {
    let prov = "turnover_by_ownership";
    let mut t = ReportTable::new("table4", "Turnover and holding periods by ownership");
    let chars = inputs.source.characteristics;
    let turnover = |s: &FirmQuarterSeries| chars.get(&s.stock_id, s.quarter).map(|c| c.mean_turnover);

    let pa = "Panel A: turnover (%) by ownership quintile";
    let pb = "Panel B: ownership-weighted turnover";
    let mut weighted: BTreeMap<OwnershipCategory, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for cat in OwnershipCategory::ALL {
        let items: Vec<(StockId, Quarter, f64, f64)> = inputs
            .series
            .iter()
            .filter_map(|s| {
                let f = inputs.source.value(Regressor::Ownership(cat), &s.stock_id, s.quarter)?;
                Some((s.stock_id.clone(), s.quarter, f, 100.0 * turnover(s)?))
            })
            .collect();
        push_bucket_rows(&mut t, pa, cat.label(), &ownership_quintiles(&items, 5), 5, prov);

        let mut by_q: BTreeMap<Quarter, (f64, f64)> = BTreeMap::new();
        for (_, q, f, to) in &items {
            let e = by_q.entry(*q).or_default();
            e.0 += f * to / 100.0;
            e.1 += f;
        }
        let (to_series, hold_series): (Vec<f64>, Vec<f64>) = by_q
            .values()
            .filter(|(_, w)| *w > 0.0)
            .map(|(s, w)| s / w)
            .filter(|to| *to > 0.0)
            .map(|to| (100.0 * to, 1.0 / to))
            .unzip();
        weighted.insert(cat, (to_series, hold_series));
    }
    for cat in OwnershipCategory::ALL {
        let (to, hold) = &weighted[&cat];
        t.push(pb, "Turnover (%)", cat.label(), mean(to), None, prov);
        t.push(pb, "Holding period (days)", cat.label(), mean(hold), None, prov);
    }
    let (ft, fh) = &weighted[&OwnershipCategory::ForeignInstitution];
    let (lt, lh) = &weighted[&OwnershipCategory::LocalInstitution];
    let d = |a: &[f64], b: &[f64]| mean(a).zip(mean(b)).map(|(x, y)| x - y);
    t.push(pb, "Turnover (%)", "Foreign-Local", d(ft, lt), welch_t(ft, lt), prov);
    t.push(pb, "Holding period (days)", "Foreign-Local", d(fh, lh), welch_t(fh, lh), prov);

    let pc = "Panel C: index vs non-index";
    let mut by_q: BTreeMap<(Quarter, bool), Vec<f64>> = BTreeMap::new();
    for s in inputs.series {
        if let Some(to) = turnover(s) {
            let member = inputs.source.index.contains(&s.stock_id, s.quarter);
            by_q.entry((s.quarter, member)).or_default().push(to);
        }
    }
    let mut split: [(Vec<f64>, Vec<f64>); 2] = Default::default();
    for ((_, member), v) in &by_q {
        let m = mean(v).expect("non-empty");
        if m > 0.0 {
            let side = &mut split[usize::from(*member)];
            side.0.push(100.0 * m);
            side.1.push(1.0 / m);
        }
    }
    let [(nt, nh), (it, ih)] = &split;
    t.push(pc, "Turnover (%)", "Index", mean(it), None, prov);
    t.push(pc, "Holding period (days)", "Index", mean(ih), None, prov);
    t.push(pc, "Turnover (%)", "Non-index", mean(nt), None, prov);
    t.push(pc, "Holding period (days)", "Non-index", mean(nh), None, prov);
    t.push(pc, "Turnover (%)", "Index-Non-index", d(it, nt), welch_t(it, nt), prov);
    t.push(pc, "Holding period (days)", "Index-Non-index", d(ih, nh), welch_t(ih, nh), prov);
    t
}

/// High-ownership betas across ownership quintiles, overall and within size terciles.
pub fn hi_beta_sorts(inputs: &AnalysisInputs<'_>) -> ReportTable {
    let prov = "hi_beta_sorts";
    let cat = inputs.hi_category;
    let mut t = ReportTable::new("table7", format!("High-ownership beta by {} quintile", cat.label()));
    let items: Vec<(StockId, Quarter, f64, f64)> = inputs
        .estimates
        .iter()
        .filter_map(|e| {
            let f = inputs.source.value(Regressor::Ownership(cat), &e.stock_id, e.quarter)?;
            Some((e.stock_id.clone(), e.quarter, f, e.beta_hi?))
        })
        .collect();
    let pa = "Panel A: ownership quintiles";
    push_quintile_columns(&mut t, pa, "All", &ownership_quintiles(&items, 5), prov);

    let pb = "Panel B: size terciles x ownership quintiles";
    let mut by_q: BTreeMap<Quarter, Vec<(&StockId, f64, f64, usize)>> = BTreeMap::new();
    for (id, q, f, b) in &items {
        if let Some(&g) = inputs.size_groups.get(&key(id, *q)) {
            by_q.entry(*q).or_default().push((id, *f, *b, g as usize));
        }
    }
    let mut by_group: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for xs in by_q.values() {
        let cs: Vec<(&StockId, f64)> = xs.iter().map(|x| (x.0, x.1)).collect();
        let outer: Vec<usize> = xs.iter().map(|x| x.3).collect();
        let labels = nested_sort_assign(&cs, &outer, 5).expect("finite ownership fractions");
        for (x, l) in xs.iter().zip(labels) {
            by_group.entry(x.3).or_default().push((l, x.2));
        }
    }
    for g in [SizeGroup::Small, SizeGroup::Mid, SizeGroup::Large] {
        let v = by_group.get(&(g as usize)).map_or(&[][..], Vec::as_slice);
        push_quintile_columns(&mut t, pb, g.label(), v, prov);
    }
    t
}

/// Like [`push_bucket_rows`] but laid out with quintiles as columns.
fn push_quintile_columns(t: &mut ReportTable, panel: &str, row: &str, buckets: &[(usize, f64)], prov: &str) {
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); 5];
    for (b, v) in buckets {
        per[b - 1].push(*v);
    }
    for (i, v) in per.iter().enumerate() {
        let col = match i {
            0 => "Q1 (Lo)".to_string(),
            4 => "Q5 (Hi)".to_string(),
            i => format!("Q{}", i + 1),
        };
        t.push(panel, row, &col, mean(v), None, prov);
    }
    let diff = mean(&per[4]).zip(mean(&per[0])).map(|(h, l)| h - l);
    t.push(panel, row, "Hi-Lo", diff, welch_t(&per[4], &per[0]), prov);
}

/// Firm-quarter distributions of betas, trading activity and autocorrelation
/// for index and non-index stocks.
pub fn index_comparison(inputs: &AnalysisInputs<'_>) -> ReportTable {
    let prov = "index_comparison";
    let mut t = ReportTable::new("table9", "Index versus non-index stocks");
    let chars = inputs.source.characteristics;
    let index = inputs.source.index;

    // Non-index stocks split at the quarterly median of prior-quarter size.
    let mut non_index: BTreeMap<Quarter, Vec<(&StockId, f64)>> = BTreeMap::new();
    for e in inputs.estimates {
        if !index.contains(&e.stock_id, e.quarter) {
            if let Some(sz) = inputs.source.value(Regressor::Size, &e.stock_id, e.quarter) {
                non_index.entry(e.quarter).or_default().push((&e.stock_id, sz));
            }
        }
    }
    let mut half: BTreeMap<(StockId, Quarter), usize> = BTreeMap::new();
    for (q, cs) in &non_index {
        for ((id, _), l) in cs.iter().zip(sort_assign(cs, 2).expect("finite sizes")) {
            half.insert(((*id).clone(), *q), l);
        }
    }

    let cols = ["Index", "All", "Non-index", "Non-index Medium", "Non-index Small"];
    let vars = ["beta_L", "beta_TO", "Dollar volume ($k)", "Turnover (%)", "Autocorrelation (%)"];
    let mut data: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for e in inputs.estimates {
        let member = index.contains(&e.stock_id, e.quarter);
        let mut groups = vec!["All", if member { "Index" } else { "Non-index" }];
        match half.get(&key(&e.stock_id, e.quarter)) {
            Some(2) => groups.push("Non-index Medium"),
            Some(_) => groups.push("Non-index Small"),
            None => {}
        }
        let c = chars.get(&e.stock_id, e.quarter);
        let values = [
            Some(e.beta_l),
            e.beta_to,
            c.map(|c| c.mean_dollar_volume / 1e3),
            c.map(|c| 100.0 * c.mean_turnover),
            e.autocorr.map(|a| 100.0 * a),
        ];
        for g in groups {
            for (var, v) in vars.iter().zip(values) {
                if let Some(v) = v {
                    data.entry((var, g)).or_default().push(v);
                }
            }
        }
    }
    for var in vars {
        for col in cols {
            let v = data.get(&(var, col)).map_or(&[][..], Vec::as_slice);
            let stats = [
                ("Mean", mean(v)),
                ("Median", median(v)),
                ("Min", min_max(v).map(|m| m.0)),
                ("P25", quantile(v, 0.25)),
                ("P75", quantile(v, 0.75)),
                ("Max", min_max(v).map(|m| m.1)),
                ("Std", sample_std(v)),
            ];
            for (s, x) in stats {
                t.push(var, s, col, x, None, prov);
            }
        }
    }
    t
}

/// Quarterly standard deviation of daily market illiquidity changes.
pub fn market_volatility_series(market_days: &[MarketDay]) -> FigureSeries {
    let mut by_q: BTreeMap<Quarter, Vec<f64>> = BTreeMap::new();
    for d in market_days {
        if let Some(x) = d.delta_illiq_mkt {
            by_q.entry(Quarter::of(d.date)).or_default().push(x);
        }
    }
    FigureSeries {
        name: "fig1".into(),
        columns: vec!["sd_delta_illiq_mkt".into()],
        rows: by_q.into_iter().map(|(q, v)| (q, vec![sample_std(&v)])).collect(),
    }
}

/// Quarterly mean beta_L of large and small firms and their difference.
pub fn beta_spread_series(estimates: &[BetaEstimate], size_groups: &SizeGroups) -> FigureSeries {
    FigureSeries {
        name: "fig2".into(),
        columns: vec!["beta_l_large".into(), "beta_l_small".into(), "spread".into()],
        rows: large_small_series(estimates, size_groups)
            .into_iter()
            .map(|(q, l, s)| (q, vec![Some(l), Some(s), Some(l - s)]))
            .collect(),
    }
}

/// Quarterly mean high-ownership beta and the share of positive estimates.
pub fn hi_beta_series(estimates: &[BetaEstimate]) -> FigureSeries {
    let rows = quarterly_group_means(estimates, &SizeGroups::new(), |e| e.beta_hi)
        .into_iter()
        .filter_map(|(q, m)| {
            let all = m.get(&None)?;
            Some((q, vec![Some(all.mean()), Some(100.0 * all.n_pos as f64 / all.n as f64)]))
        })
        .collect();
    FigureSeries {
        name: "fig3".into(),
        columns: vec!["mean_beta_hi".into(), "pct_positive".into()],
        rows,
    }
}
