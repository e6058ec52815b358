//! Synthetic daily panels with known liquidity loadings.
//!
//! Log illiquidity of stock i follows a random walk whose daily increment is
//! `lambda_iq * f_d + h_iq * g_d + e_id`, with `f` a market illiquidity shock,
//! `g` a shock common to high-ownership stocks and `e` idiosyncratic. Rare
//! one-day spikes are added on top of the level so the tail filter has
//! something to remove. Dollar volume is backed out as `|r| / illiq`, which
//! makes the Amihud measure recover the latent level exactly.
//!
//! The market loadings are calibrated each quarter so that the population
//! coefficient of a stock's illiquidity change on the value-weighted
//! leave-one-out market change equals the configured target
//! `group_beta + ownership_beta_slope * foreign_ownership`.

use std::io::Write;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::analytics::sort_assign;
use crate::error::{Error, Result};
use crate::ingest::{DailyBar, IndexMembership, OwnershipSnapshot};
use crate::rng::SimRng;
use crate::types::{OwnershipCategory, Quarter, SizeGroup, StockId};

/// Value per size tercile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupValues {
    pub small: f64,
    pub mid: f64,
    pub large: f64,
}

impl GroupValues {
    pub fn get(&self, g: SizeGroup) -> f64 {
        match g {
            SizeGroup::Small => self.small,
            SizeGroup::Mid => self.mid,
            SizeGroup::Large => self.large,
        }
    }

    fn uniform(v: f64) -> Self {
        GroupValues { small: v, mid: v, large: v }
    }
}

/// Standard deviations of the random channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseScales {
    pub market_factor: f64,
    pub hi_factor: f64,
    /// Daily idiosyncratic change in log illiquidity.
    pub idiosyncratic: f64,
    /// Daily log return.
    pub returns: f64,
    /// Multiplicative lognormal noise on dollar volume; zero keeps Amihud exact.
    pub dollar_volume: f64,
    /// Idiosyncratic lognormal noise on share volume.
    pub turnover: f64,
    /// Market-wide lognormal shock on share volume.
    pub turnover_common: f64,
    /// Persistent cross-sectional spread of ownership fractions.
    pub ownership: f64,
    /// Quarter-to-quarter ownership noise.
    pub ownership_quarterly: f64,
}

impl Default for NoiseScales {
    fn default() -> Self {
        NoiseScales {
            market_factor: 0.05,
            hi_factor: 0.05,
            idiosyncratic: 0.1,
            returns: 0.02,
            dollar_volume: 0.0,
            turnover: 0.3,
            turnover_common: 0.1,
            ownership: 0.05,
            ownership_quarterly: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_stocks: usize,
    pub n_years: usize,
    pub start_year: i32,
    pub seed: u64,
    /// Up to 64 uses the first weekdays of each quarter; more uses calendar days (at most 90).
    pub trading_days_per_quarter: usize,
    /// Liquidity beta by size tercile, before the ownership term.
    pub group_betas: GroupValues,
    /// Change in each group's beta per quarter.
    pub group_beta_trend: GroupValues,
    /// Liquidity beta per unit of prior-quarter foreign ownership.
    pub ownership_beta_slope: f64,
    pub hi_loading_base: f64,
    /// Loading on the high-ownership shock per unit of prior-quarter foreign ownership.
    pub hi_loading_slope: f64,
    pub factor_correlation: f64,
    /// Mean daily turnover at zero foreign ownership.
    pub base_turnover: f64,
    /// Daily turnover per unit of prior-quarter foreign ownership.
    pub turnover_ownership_slope: f64,
    /// Mean foreign ownership fraction by initial size tercile.
    pub foreign_ownership: GroupValues,
    pub local_ownership: GroupValues,
    /// Yearly change in every stock's foreign ownership.
    pub foreign_drift_per_year: f64,
    pub noise_scales: NoiseScales,
    pub spike_probability: f64,
    /// Spike size in units of the idiosyncratic scale.
    pub spike_scale: f64,
    /// Stocks in the index each quarter, by prior-quarter market cap.
    pub index_size: usize,
    pub price_range: (f64, f64),
    pub market_cap_log_mean: f64,
    pub market_cap_log_sd: f64,
    /// Same shares, prices and returns for every stock, so all caps are equal.
    pub equal_caps: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_stocks: 500,
            n_years: 8,
            start_year: 2001,
            seed: 20_240_601,
            trading_days_per_quarter: 63,
            group_betas: GroupValues {
                small: 0.1,
                mid: 0.3,
                large: 0.5,
            },
            group_beta_trend: GroupValues::uniform(0.0),
            ownership_beta_slope: 0.3,
            hi_loading_base: 0.0,
            hi_loading_slope: 0.5,
            factor_correlation: 0.0,
            base_turnover: 0.002,
            turnover_ownership_slope: 0.004,
            foreign_ownership: GroupValues {
                small: 0.10,
                mid: 0.22,
                large: 0.42,
            },
            local_ownership: GroupValues {
                small: 0.08,
                mid: 0.12,
                large: 0.18,
            },
            foreign_drift_per_year: 0.0,
            noise_scales: NoiseScales::default(),
            spike_probability: 0.004,
            spike_scale: 30.0,
            index_size: 200,
            price_range: (0.5, 40.0),
            market_cap_log_mean: (200e6_f64).ln(),
            market_cap_log_sd: 1.5,
            equal_caps: false,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("synth: {m}")));
        if self.n_stocks < 30 {
            return bad(format!("n_stocks must be at least 30, got {}", self.n_stocks));
        }
        if self.n_years == 0 {
            return bad("n_years must be positive".into());
        }
        if !(2..=90).contains(&self.trading_days_per_quarter) {
            return bad(format!(
                "trading_days_per_quarter must be in 2..=90, got {}",
                self.trading_days_per_quarter
            ));
        }
        let n = &self.noise_scales;
        for (name, v) in [
            ("market_factor", n.market_factor),
            ("hi_factor", n.hi_factor),
            ("idiosyncratic", n.idiosyncratic),
            ("returns", n.returns),
            ("dollar_volume", n.dollar_volume),
            ("turnover", n.turnover),
            ("turnover_common", n.turnover_common),
            ("ownership", n.ownership),
            ("ownership_quarterly", n.ownership_quarterly),
            ("market_cap_log_sd", self.market_cap_log_sd),
            ("spike_scale", self.spike_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative scale, got {v}"));
            }
        }
        if n.returns == 0.0 {
            return bad("return noise must be positive so that Amihud is defined".into());
        }
        if !(-1.0..=1.0).contains(&self.factor_correlation) {
            return bad(format!("factor_correlation must be in [-1, 1], got {}", self.factor_correlation));
        }
        if !(0.0..1.0).contains(&self.spike_probability) {
            return bad(format!("spike_probability must be in [0, 1), got {}", self.spike_probability));
        }
        let (lo, hi) = self.price_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad(format!("price_range must satisfy 0 < lo <= hi, got ({lo}, {hi})"));
        }
        if self.base_turnover <= 0.0 {
            return bad("base_turnover must be positive".into());
        }
        if self.index_size > self.n_stocks {
            return bad(format!("index_size {} exceeds n_stocks {}", self.index_size, self.n_stocks));
        }
        Ok(())
    }

    pub fn quarters(&self) -> Vec<Quarter> {
        (0..self.n_years as i32)
            .flat_map(|y| (1..=4).map(move |q| Quarter::new(self.start_year + y, q)))
            .collect()
    }

    /// Trading calendar of one quarter.
    pub fn trading_days(&self, q: Quarter) -> Vec<NaiveDate> {
        let n = self.trading_days_per_quarter;
        let all = q.first_day().iter_days().take_while(|d| *d <= q.last_day());
        if n > 64 {
            all.take(n).collect()
        } else {
            all.filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
                .take(n)
                .collect()
        }
    }
}

/// True parameters of one stock in one quarter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmQuarterTruth {
    pub stock_id: StockId,
    pub quarter: Quarter,
    /// Tercile of market cap at the end of the previous quarter.
    pub size_group: SizeGroup,
    /// Target coefficient on the leave-one-out value-weighted market change.
    pub beta_l: f64,
    /// Calibrated loading on the market shock.
    pub market_loading: f64,
    /// Loading on the high-ownership shock.
    pub beta_hi: f64,
    /// Ownership at the end of the previous quarter, driving this quarter's loadings.
    pub prior_foreign: f64,
    pub foreign: f64,
    pub local: f64,
    pub institution: f64,
    pub turnover: f64,
    pub index_member: bool,
}

/// Per-stock averages of the firm-quarter truth.
#[derive(Debug, Clone, PartialEq)]
pub struct StockTruth {
    pub stock_id: StockId,
    pub initial_group: SizeGroup,
    pub beta_l: f64,
    pub beta_hi: f64,
    pub foreign: f64,
    pub local: f64,
    pub institution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorDay {
    pub date: NaiveDate,
    pub market_shock: f64,
    pub hi_shock: f64,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub config: SynthConfig,
    pub stocks: Vec<StockTruth>,
    /// Sorted by (stock, quarter).
    pub firm_quarters: Vec<FirmQuarterTruth>,
    pub factors: Vec<FactorDay>,
    /// Latent illiquidity level for every bar, in bar order.
    pub latent_illiq: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    /// Sorted by (stock, date).
    pub bars: Vec<DailyBar>,
    pub ownership: Vec<OwnershipSnapshot>,
    pub index: IndexMembership,
    pub truth: GroundTruth,
}

/// Market loadings whose leave-one-out population betas match `targets`.
///
/// `weights` are the value weights, `hi_loadings` the loadings on the
/// second shock. Solved by damped fixed-point iteration.
pub fn calibrate_market_loadings(
    targets: &[f64],
    hi_loadings: &[f64],
    weights: &[f64],
    config: &SynthConfig,
) -> Result<Vec<f64>> {
    let n = targets.len();
    let sf = config.noise_scales.market_factor;
    let sg = config.noise_scales.hi_factor;
    let rho = config.factor_correlation;
    let se2 = config.noise_scales.idiosyncratic.powi(2);
    if targets.iter().all(|b| *b == 0.0) && hi_loadings.iter().all(|h| *h == 0.0) {
        return Ok(vec![0.0; n]);
    }
    if sf == 0.0 {
        return Err(Error::Synth("nonzero liquidity betas need a positive market factor scale".into()));
    }
    let w_total: f64 = weights.iter().sum();
    let w_sq: f64 = weights.iter().map(|w| w * w).sum();
    let w_h: f64 = weights.iter().zip(hi_loadings).map(|(w, h)| w * h).sum();
    let mut lambda = targets.to_vec();
    for _ in 0..2000 {
        let w_l: f64 = weights.iter().zip(&lambda).map(|(w, l)| w * l).sum();
        let mut max_step = 0.0_f64;
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let w = weights[i];
            let rest = w_total - w;
            let l = (w_l - w * lambda[i]) / rest;
            let h = (w_h - w * hi_loadings[i]) / rest;
            let noise = se2 * (w_sq - w * w) / (rest * rest);
            let var_m = l * l * sf * sf + h * h * sg * sg + 2.0 * l * h * rho * sf * sg + noise;
            let cov_f = l * sf * sf + h * rho * sf * sg;
            if cov_f.is_nan() || cov_f.abs() <= 1e-300 {
                return Err(Error::Synth("targets imply a market with no illiquidity shock".into()));
            }
            let cov_g = h * sg * sg + l * rho * sf * sg;
            let target = (targets[i] * var_m - hi_loadings[i] * cov_g) / cov_f;
            let step = 0.5 * (target - lambda[i]);
            max_step = max_step.max(step.abs());
            next.push(lambda[i] + step);
        }
        lambda = next;
        if !lambda.iter().all(|l| l.is_finite()) {
            break;
        }
        if max_step < 1e-13 {
            return Ok(lambda);
        }
    }
    Err(Error::Synth(
        "market loadings did not converge; the value-weighted mean target beta must lie strictly between 0 and 1 when idiosyncratic noise is present".into(),
    ))
}

struct StockState {
    id: StockId,
    shares: f64,
    price: f64,
    log_illiq: f64,
    initial_group: SizeGroup,
    foreign_effect: f64,
    local_effect: f64,
    foreign: f64,
    local: f64,
    book_to_market: f64,
    dividend_yield: f64,
}

fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

fn terciles(ids: &[StockId], caps: &[f64]) -> Vec<SizeGroup> {
    let cs: Vec<(&StockId, f64)> = ids.iter().zip(caps.iter().copied()).collect();
    sort_assign(&cs, 3)
        .expect("finite caps")
        .into_iter()
        .map(SizeGroup::from_tercile)
        .collect()
}

pub fn generate_panel(config: &SynthConfig) -> Result<SyntheticPanel> {
    config.validate()?;
    let mut rng = SimRng::new(config.seed);
    let n = config.n_stocks;
    let ns = &config.noise_scales;
    let width = n.to_string().len().max(4);
    let ids: Vec<StockId> = (1..=n).map(|i| StockId::new(format!("S{i:0width$}"))).collect();

    let (plo, phi) = config.price_range;
    let mut stocks: Vec<StockState> = Vec::with_capacity(n);
    for id in &ids {
        let (price, cap) = if config.equal_caps {
            ((plo * phi).sqrt(), config.market_cap_log_mean.exp())
        } else {
            let price = (plo.ln() + (phi.ln() - plo.ln()) * rng.uniform()).exp();
            (price, (config.market_cap_log_mean + config.market_cap_log_sd * rng.normal()).exp())
        };
        let shares = (cap / price).round().max(1.0);
        // illiquidity roughly inverse to size, so that |r| / (illiq * cap) is a plausible turnover
        let log_illiq = (10.0 / (shares * price)).ln() + 0.5 * rng.normal();
        stocks.push(StockState {
            id: id.clone(),
            shares,
            price,
            log_illiq,
            initial_group: SizeGroup::Small,
            foreign_effect: ns.ownership * rng.normal(),
            local_effect: ns.ownership * rng.normal(),
            foreign: 0.0,
            local: 0.0,
            book_to_market: (1.0 + rng.uniform_range(0.2, 1.5)).ln(),
            dividend_yield: rng.uniform_range(0.0, 0.08),
        });
    }
    let caps0: Vec<f64> = stocks.iter().map(|s| s.shares * s.price).collect();
    for (s, g) in stocks.iter_mut().zip(terciles(&ids, &caps0)) {
        s.initial_group = g;
    }

    let quarters = config.quarters();
    let draw_ownership = |s: &StockState, years: f64, rng: &mut SimRng| {
        let g = s.initial_group;
        let f = config.foreign_ownership.get(g)
            + config.foreign_drift_per_year * years
            + s.foreign_effect
            + ns.ownership_quarterly * rng.normal();
        let l = config.local_ownership.get(g) + s.local_effect + ns.ownership_quarterly * rng.normal();
        let f = clip(f, 0.01, 0.94);
        (f, clip(l, 0.01, 0.95 - f))
    };
    for s in stocks.iter_mut() {
        let (f, l) = draw_ownership(s, 0.0, &mut rng);
        s.foreign = f;
        s.local = l;
    }

    let total_days: usize = quarters.iter().map(|q| config.trading_days(*q).len()).sum();
    let mut day_rows: Vec<Vec<(DailyBar, f64)>> = (0..n).map(|_| Vec::with_capacity(total_days)).collect();
    let mut ownership = Vec::new();
    let mut index = IndexMembership::new();
    let mut firm_quarters = Vec::new();
    let mut factors = Vec::with_capacity(total_days);
    let mut common_ret_shock = 0.0;

    for (qi, &q) in quarters.iter().enumerate() {
        let caps: Vec<f64> = stocks.iter().map(|s| s.shares * s.price).collect();
        let groups = terciles(&ids, &caps);
        let mut by_cap: Vec<usize> = (0..n).collect();
        by_cap.sort_by(|&a, &b| caps[b].total_cmp(&caps[a]).then_with(|| ids[a].cmp(&ids[b])));
        let mut in_index = vec![false; n];
        for &i in by_cap.iter().take(config.index_size) {
            in_index[i] = true;
            index.insert(ids[i].clone(), q);
        }
        let targets: Vec<f64> = stocks
            .iter()
            .zip(&groups)
            .map(|(s, g)| {
                config.group_betas.get(*g)
                    + config.group_beta_trend.get(*g) * qi as f64
                    + config.ownership_beta_slope * s.foreign
            })
            .collect();
        let hi_loadings: Vec<f64> = stocks
            .iter()
            .map(|s| config.hi_loading_base + config.hi_loading_slope * s.foreign)
            .collect();
        let lambda = calibrate_market_loadings(&targets, &hi_loadings, &caps, config)?;
        let turnover: Vec<f64> = stocks
            .iter()
            .map(|s| (config.base_turnover + config.turnover_ownership_slope * s.foreign).max(1e-6))
            .collect();
        let prior_foreign: Vec<f64> = stocks.iter().map(|s| s.foreign).collect();

        let days = config.trading_days(q);
        for &date in &days {
            let zf = rng.normal();
            let zg = rng.normal();
            let f = ns.market_factor * zf;
            let g = ns.hi_factor
                * (config.factor_correlation * zf + (1.0 - config.factor_correlation.powi(2)).sqrt() * zg);
            let common_turnover = ns.turnover_common * rng.normal();
            if config.equal_caps {
                common_ret_shock = ns.returns * rng.normal();
            }
            factors.push(FactorDay {
                date,
                market_shock: f,
                hi_shock: g,
            });
            for (i, s) in stocks.iter_mut().enumerate() {
                let first = day_rows[i].is_empty();
                let log_ret = if config.equal_caps {
                    common_ret_shock
                } else {
                    ns.returns * rng.normal()
                };
                let e = ns.idiosyncratic * rng.normal();
                let spike = if rng.bernoulli(config.spike_probability) {
                    let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
                    sign * config.spike_scale * ns.idiosyncratic
                } else {
                    0.0
                };
                let z_vol = rng.normal();
                let z_dv = rng.normal();
                if !first {
                    s.log_illiq += lambda[i] * f + hi_loadings[i] * g + e;
                    s.price *= log_ret.exp();
                }
                let illiq = (s.log_illiq + spike).exp();
                let ret = if first { None } else { Some(log_ret.exp() - 1.0) };
                let abs_r = ret.map_or(ns.returns, f64::abs);
                let dv_noise = (ns.dollar_volume * z_dv - 0.5 * ns.dollar_volume.powi(2)).exp();
                let dollar_volume = abs_r / illiq * dv_noise;
                let vol_var = ns.turnover.powi(2) + ns.turnover_common.powi(2);
                let volume = turnover[i] * s.shares * (ns.turnover * z_vol + common_turnover - 0.5 * vol_var).exp();
                let spread_pct = clip(0.01 * (illiq * s.shares * s.price / 10.0).sqrt(), 0.0005, 0.2);
                let bar = DailyBar {
                    stock_id: s.id.clone(),
                    date,
                    close: s.price,
                    ret,
                    dollar_volume,
                    shares_outstanding: s.shares,
                    volume: Some(volume),
                    quoted_spread: Some(spread_pct * s.price),
                    high: None,
                    low: None,
                    ps_illiq: Some(-0.01 * (s.log_illiq + spike)),
                    book_to_market: Some(s.book_to_market),
                    dividend_yield: Some(s.dividend_yield),
                };
                day_rows[i].push((bar, illiq));
            }
        }

        let years = (qi + 1) as f64 / 4.0;
        let last_day = *days.last().expect("non-empty quarter");
        for (i, s) in stocks.iter_mut().enumerate() {
            let (f, l) = draw_ownership(s, years, &mut rng);
            s.foreign = f;
            s.local = l;
            let foreign_shares = (f * s.shares).round();
            let local_shares = (l * s.shares).round();
            for (category, held) in [
                (OwnershipCategory::Institution, foreign_shares + local_shares),
                (OwnershipCategory::ForeignInstitution, foreign_shares),
                (OwnershipCategory::LocalInstitution, local_shares),
            ] {
                ownership.push(OwnershipSnapshot {
                    stock_id: s.id.clone(),
                    date: last_day,
                    category,
                    shares_held: held,
                    fraction: Some(held / s.shares),
                });
            }
            firm_quarters.push(FirmQuarterTruth {
                stock_id: s.id.clone(),
                quarter: q,
                size_group: groups[i],
                beta_l: targets[i],
                market_loading: lambda[i],
                beta_hi: hi_loadings[i],
                prior_foreign: prior_foreign[i],
                foreign: foreign_shares / s.shares,
                local: local_shares / s.shares,
                institution: (foreign_shares + local_shares) / s.shares,
                turnover: turnover[i],
                index_member: in_index[i],
            });
        }
    }

    firm_quarters.sort_by(|a, b| (&a.stock_id, a.quarter).cmp(&(&b.stock_id, b.quarter)));
    ownership.sort_by(|a, b| (&a.stock_id, a.date, a.category).cmp(&(&b.stock_id, b.date, b.category)));
    let stock_truth = summarize_truth(&stocks, &firm_quarters);
    let mut bars = Vec::with_capacity(n * total_days);
    let mut latent = Vec::with_capacity(n * total_days);
    for rows in day_rows {
        for (b, l) in rows {
            bars.push(b);
            latent.push(l);
        }
    }
    Ok(SyntheticPanel {
        bars,
        ownership,
        index,
        truth: GroundTruth {
            config: config.clone(),
            stocks: stock_truth,
            firm_quarters,
            factors,
            latent_illiq: latent,
        },
    })
}

fn summarize_truth(stocks: &[StockState], fq: &[FirmQuarterTruth]) -> Vec<StockTruth> {
    stocks
        .iter()
        .map(|s| {
            let rows: Vec<&FirmQuarterTruth> = fq.iter().filter(|r| r.stock_id == s.id).collect();
            let m = |f: fn(&FirmQuarterTruth) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
            StockTruth {
                stock_id: s.id.clone(),
                initial_group: s.initial_group,
                beta_l: m(|r| r.beta_l),
                beta_hi: m(|r| r.beta_hi),
                foreign: m(|r| r.foreign),
                local: m(|r| r.local),
                institution: m(|r| r.institution),
            }
        })
        .collect()
}

/// One row per stock: average true betas and ownership over the sample.
pub fn ground_truth_report(path: &Path, truth: &GroundTruth) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "stock_id,initial_group,beta_l_true,beta_hi_true,foreign,local,institution").map_err(io)?;
    for s in &truth.stocks {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.stock_id,
            s.initial_group.label().to_lowercase(),
            s.beta_l,
            s.beta_hi,
            s.foreign,
            s.local,
            s.institution
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One row per stock-quarter with the loadings in force during the quarter.
pub fn write_firm_quarter_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(
        w,
        "stock_id,quarter,size_group,beta_l_true,market_loading,beta_hi_true,prior_foreign,foreign,local,institution,turnover,index_member"
    )
    .map_err(io)?;
    for r in &truth.firm_quarters {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.stock_id,
            r.quarter,
            r.size_group.label().to_lowercase(),
            r.beta_l,
            r.market_loading,
            r.beta_hi,
            r.prior_foreign,
            r.foreign,
            r.local,
            r.institution,
            r.turnover,
            u8::from(r.index_member)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
