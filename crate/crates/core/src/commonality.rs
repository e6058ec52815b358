//! Firm-quarter liquidity betas, high-ownership betas, volume betas and
//! return autocorrelations.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::econ::describe::{mean, one_sample_t, pearson, welch_t};
use crate::econ::{ols_fit, Design, RegressionResult};
use crate::error::{Error, Result};
use crate::illiq::{FactorView, HiPortfolio, MarketPanel};
use crate::ingest::FirmQuarterSeries;
use crate::types::{Quarter, SizeGroup, StockId, TStat};

/// Which right-hand-side controls accompany the contemporaneous factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSet {
    /// Leads and lags of the factors, market returns (lead, lag, current), squared own return.
    #[default]
    Full,
    /// Factor only.
    None,
}

impl ControlSet {
    pub fn label(self) -> &'static str {
        match self {
            ControlSet::Full => "lead_lag_ret_retsq",
            ControlSet::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    /// Remove the firm from the market aggregates it is regressed on.
    pub leave_one_out: bool,
    /// Remove a member firm from the high-ownership portfolio it is regressed on.
    pub exclude_from_hi: bool,
    pub controls: ControlSet,
    pub min_obs: usize,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            leave_one_out: true,
            exclude_from_hi: true,
            controls: ControlSet::Full,
            min_obs: 25,
        }
    }
}

/// Fewest consecutive-day turnover changes accepted for a volume beta.
pub const MIN_VOLUME_PAIRS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub stock_id: StockId,
    pub quarter: Quarter,
    pub beta_l: f64,
    /// White standard error of `beta_l`.
    pub beta_l_se: f64,
    pub beta_hi: Option<f64>,
    pub beta_hi_se: Option<f64>,
    /// Market beta estimated jointly with the high-ownership factor.
    pub beta_l_joint: Option<f64>,
    pub beta_to: Option<f64>,
    pub autocorr: Option<f64>,
    pub n_obs: usize,
    pub controls_used: String,
}

/// A firm-quarter estimate that could not be produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedEstimate {
    pub stock_id: StockId,
    pub quarter: Quarter,
    pub stage: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct BetaPanel {
    /// Sorted by (stock, quarter).
    pub estimates: Vec<BetaEstimate>,
    pub skipped: Vec<SkippedEstimate>,
}

/// Regression sample after aligning firm days with the factor calendar.
struct Aligned {
    y: Vec<f64>,
    cols: Vec<(&'static str, Vec<f64>)>,
}

impl Aligned {
    fn design(self) -> (Vec<f64>, Design) {
        let mut d = Design::with_intercept(self.y.len());
        for (name, c) in self.cols {
            d.push(name, c);
        }
        (self.y, d)
    }
}

fn align(
    series: &FirmQuarterSeries,
    view: &FactorView,
    hi: Option<&[Option<f64>]>,
    controls: ControlSet,
) -> Aligned {
    let mut names: Vec<&'static str> = Vec::new();
    if hi.is_some() {
        names.push("hi");
    }
    names.push("mkt");
    if controls == ControlSet::Full {
        if hi.is_some() {
            names.extend(["hi_lead", "hi_lag"]);
        }
        names.extend(["mkt_lead", "mkt_lag", "ret_mkt", "ret_mkt_lead", "ret_mkt_lag", "ret_sq"]);
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut y = Vec::new();
    let n = view.dates.len();
    for d in &series.days {
        let Some(k) = view.index_of(d.date) else { continue };
        // leads and lags stay inside the quarter
        if k == 0 || k + 1 >= n {
            continue;
        }
        let m = |v: &[Option<f64>], j: usize| v[j];
        let mut row: Vec<Option<f64>> = Vec::with_capacity(names.len());
        if let Some(h) = hi {
            row.push(m(h, k));
        }
        row.push(m(&view.delta, k));
        if controls == ControlSet::Full {
            if let Some(h) = hi {
                row.extend([m(h, k + 1), m(h, k - 1)]);
            }
            row.extend([
                m(&view.delta, k + 1),
                m(&view.delta, k - 1),
                m(&view.ret, k),
                m(&view.ret, k + 1),
                m(&view.ret, k - 1),
                Some(d.ret_sq()),
            ]);
        }
        if row.iter().any(Option::is_none) {
            continue;
        }
        y.push(d.delta_illiq);
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v.expect("checked above"));
        }
    }
    Aligned {
        y,
        cols: names.into_iter().zip(cols).collect(),
    }
}

fn fit_aligned(a: Aligned, min_obs: usize) -> Result<RegressionResult> {
    if a.y.len() < min_obs {
        return Err(Error::InsufficientData(format!(
            "{} aligned days, {min_obs} required",
            a.y.len()
        )));
    }
    let (y, d) = a.design();
    ols_fit(&y, &d)
}

/// Market-model regression of the firm's illiquidity changes; the market
/// beta is the coefficient named `mkt`.
pub fn estimate_liquidity_beta(
    series: &FirmQuarterSeries,
    market: &FactorView,
    config: &EstimationConfig,
) -> Result<RegressionResult> {
    fit_aligned(align(series, market, None, config.controls), config.min_obs)
}

/// Joint regression on the high-ownership portfolio (`hi`) and the market
/// (`mkt`); `hi_changes` is aligned with `market.dates`.
pub fn estimate_high_ownership_beta(
    series: &FirmQuarterSeries,
    market: &FactorView,
    hi_changes: &[Option<f64>],
    config: &EstimationConfig,
) -> Result<RegressionResult> {
    if hi_changes.len() != market.dates.len() {
        return Err(Error::InsufficientData(format!(
            "portfolio series has {} days, market calendar {}",
            hi_changes.len(),
            market.dates.len()
        )));
    }
    fit_aligned(align(series, market, Some(hi_changes), config.controls), config.min_obs)
}

/// Stock turnover %-change on market turnover %-change over consecutive market days.
pub fn estimate_volume_beta(series: &FirmQuarterSeries, market: &FactorView) -> Result<RegressionResult> {
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut prev: Option<(usize, f64)> = None;
    for t in &series.trading {
        let Some(k) = market.index_of(t.date) else {
            prev = None;
            continue;
        };
        if let Some((kp, to_prev)) = prev {
            if kp + 1 == k && to_prev > 0.0 {
                if let Some(mx) = market.turnover_change(k) {
                    y.push((t.turnover - to_prev) / to_prev);
                    x.push(mx);
                }
            }
        }
        prev = Some((k, t.turnover));
    }
    if y.len() < MIN_VOLUME_PAIRS {
        return Err(Error::InsufficientData(format!(
            "{} turnover changes, {MIN_VOLUME_PAIRS} required",
            y.len()
        )));
    }
    let mut d = Design::with_intercept(y.len());
    d.push("turnover_mkt", x);
    ols_fit(&y, &d)
}

/// Lag-one Pearson correlation of `returns`; `None` under zero variance.
pub fn return_autocorrelation(returns: &[f64]) -> Option<f64> {
    if returns.len() < 3 {
        return None;
    }
    pearson(&returns[1..], &returns[..returns.len() - 1])
}

fn coefficient_and_se(fit: &RegressionResult, name: &str) -> Option<(f64, f64)> {
    fit.index_of(name).map(|j| (fit.coefficients[j], fit.hac_se(j)))
}

/// Estimates every firm-quarter in parallel. Failing market-beta fits drop
/// the firm-quarter; failing secondary fits leave their fields empty. Both
/// are recorded in `skipped`.
pub fn estimate_panel(
    series: &[FirmQuarterSeries],
    market: &MarketPanel,
    hi: Option<&HiPortfolio>,
    config: &EstimationConfig,
) -> BetaPanel {
    let results: Vec<(Option<BetaEstimate>, Vec<SkippedEstimate>)> = series
        .par_iter()
        .map(|s| estimate_one(s, market, hi, config))
        .collect();
    let mut panel = BetaPanel::default();
    for (e, skips) in results {
        panel.estimates.extend(e);
        panel.skipped.extend(skips);
    }
    panel
}

fn estimate_one(
    s: &FirmQuarterSeries,
    market: &MarketPanel,
    hi: Option<&HiPortfolio>,
    config: &EstimationConfig,
) -> (Option<BetaEstimate>, Vec<SkippedEstimate>) {
    let mut skipped = Vec::new();
    let skip = |stage: &'static str, e: Error| SkippedEstimate {
        stock_id: s.stock_id.clone(),
        quarter: s.quarter,
        stage,
        reason: e.to_string(),
    };
    let view = market.view(s, config.leave_one_out);
    let fit = match estimate_liquidity_beta(s, &view, config) {
        Ok(f) => f,
        Err(e) => return (None, vec![skip("beta_l", e)]),
    };
    let (beta_l, beta_l_se) = coefficient_and_se(&fit, "mkt").expect("market column present");

    let (mut beta_hi, mut beta_hi_se, mut beta_l_joint) = (None, None, None);
    if let Some(p) = hi {
        let changes = p.view(s, config.exclude_from_hi, &view.dates);
        match estimate_high_ownership_beta(s, &view, &changes, config) {
            Ok(f) => {
                let (b, se) = coefficient_and_se(&f, "hi").expect("hi column present");
                beta_hi = Some(b);
                beta_hi_se = Some(se);
                beta_l_joint = f.coefficient("mkt");
            }
            Err(e) => skipped.push(skip("beta_hi", e)),
        }
    }
    let beta_to = match estimate_volume_beta(s, &view) {
        Ok(f) => f.coefficient("turnover_mkt"),
        Err(e) => {
            skipped.push(skip("beta_to", e));
            None
        }
    };
    let returns: Vec<f64> = s.trading.iter().filter_map(|t| t.ret).collect();
    let autocorr = if returns.len() >= config.min_obs {
        return_autocorrelation(&returns)
    } else {
        None
    };
    (
        Some(BetaEstimate {
            stock_id: s.stock_id.clone(),
            quarter: s.quarter,
            beta_l,
            beta_l_se,
            beta_hi,
            beta_hi_se,
            beta_l_joint,
            beta_to,
            autocorr,
            n_obs: fit.n_obs,
            controls_used: config.controls.label().to_string(),
        }),
        skipped,
    )
}

pub fn write_beta_panel(path: &Path, estimates: &[BetaEstimate]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    writeln!(
        w,
        "stock_id,quarter,beta_L,beta_HI,beta_TO,autocorr,n_obs,beta_L_se,beta_HI_se,beta_L_joint,controls_used"
    )
    .map_err(io)?;
    for e in estimates {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            e.stock_id,
            e.quarter,
            e.beta_l,
            opt(e.beta_hi),
            opt(e.beta_to),
            opt(e.autocorr),
            e.n_obs,
            e.beta_l_se,
            opt(e.beta_hi_se),
            opt(e.beta_l_joint),
            e.controls_used
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Cross-sectional summary of firm-year mean betas.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupYearStat {
    pub mean: f64,
    /// Absent with fewer than two firms.
    pub t_stat: Option<TStat>,
    pub pct_positive: f64,
    pub n_firms: usize,
    /// The firm-year means themselves, sorted by stock id.
    pub firm_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnualBetaRow {
    pub year: i32,
    /// `None` is the all-stocks column.
    pub groups: BTreeMap<Option<SizeGroup>, GroupYearStat>,
    /// Large minus small, with a Welch t-statistic.
    pub large_minus_small: Option<(f64, Option<TStat>)>,
}

/// Averages each firm's quarterly `beta_l` within a year (separately for each
/// size group it occupied), then summarizes across firms.
pub fn annual_beta_means(
    estimates: &[BetaEstimate],
    size_groups: &HashMap<(StockId, Quarter), SizeGroup>,
) -> Result<Vec<AnnualBetaRow>> {
    annual_means_by(estimates, size_groups, |e| Some(e.beta_l))
}

/// Same as [`annual_beta_means`] for any per-estimate quantity.
pub fn annual_means_by(
    estimates: &[BetaEstimate],
    size_groups: &HashMap<(StockId, Quarter), SizeGroup>,
    value: impl Fn(&BetaEstimate) -> Option<f64>,
) -> Result<Vec<AnnualBetaRow>> {
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no beta estimates".into()));
    }
    // (year, group, stock) -> quarterly values
    let mut cells: BTreeMap<(i32, Option<SizeGroup>, &StockId), Vec<f64>> = BTreeMap::new();
    for e in estimates {
        let Some(v) = value(e) else { continue };
        let year = e.quarter.first_day().year();
        cells.entry((year, None, &e.stock_id)).or_default().push(v);
        if let Some(g) = size_groups.get(&(e.stock_id.clone(), e.quarter)) {
            cells.entry((year, Some(*g), &e.stock_id)).or_default().push(v);
        }
    }
    let mut by_year: BTreeMap<i32, BTreeMap<Option<SizeGroup>, Vec<f64>>> = BTreeMap::new();
    for ((year, g, _), vals) in cells {
        let m = mean(&vals).expect("non-empty cell");
        by_year.entry(year).or_default().entry(g).or_default().push(m);
    }
    let mut rows = Vec::new();
    for (year, groups) in by_year {
        let mut stats = BTreeMap::new();
        for (g, firm_means) in groups {
            let n = firm_means.len();
            let pos = firm_means.iter().filter(|v| **v > 0.0).count();
            stats.insert(
                g,
                GroupYearStat {
                    mean: mean(&firm_means).expect("non-empty"),
                    t_stat: one_sample_t(&firm_means),
                    pct_positive: 100.0 * pos as f64 / n as f64,
                    n_firms: n,
                    firm_means,
                },
            );
        }
        let large_minus_small = match (stats.get(&Some(SizeGroup::Large)), stats.get(&Some(SizeGroup::Small))) {
            (Some(l), Some(s)) => Some((
                l.mean - s.mean,
                welch_t(&l.firm_means, &s.firm_means),
            )),
            _ => None,
        };
        rows.push(AnnualBetaRow {
            year,
            groups: stats,
            large_minus_small,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_returns_have_autocorrelation_minus_one() {
        let r: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
        assert!((return_autocorrelation(&r).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(return_autocorrelation(&[0.004; 40]), None);
    }

    #[test]
    fn firm_year_mean_of_quarterly_betas() {
        let mk = |q: u8, b: f64| BetaEstimate {
            stock_id: "A".into(),
            quarter: Quarter::new(2001, q),
            beta_l: b,
            beta_l_se: 0.1,
            beta_hi: None,
            beta_hi_se: None,
            beta_l_joint: None,
            beta_to: None,
            autocorr: None,
            n_obs: 60,
            controls_used: "none".into(),
        };
        let est: Vec<_> = [0.1, 0.2, 0.3, 0.4].iter().enumerate().map(|(i, b)| mk(i as u8 + 1, *b)).collect();
        let rows = annual_beta_means(&est, &HashMap::new()).unwrap();
        assert_eq!(rows.len(), 1);
        let all = &rows[0].groups[&None];
        assert!((all.mean - 0.25).abs() < 1e-15);
        assert_eq!(all.pct_positive, 100.0);
        assert!(rows[0].large_minus_small.is_none());
    }
}
