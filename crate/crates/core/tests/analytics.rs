use std::collections::HashMap;

use chrono::{Datelike, Duration, NaiveDate};
use liqcomm::analytics::{
    bucket_sizes, fm_beta_on_ownership, fm_table, hi_beta_series, hi_beta_sorts, market_volatility_series,
    size_terciles, sort_assign, spread_points, spread_regression, spread_table, turnover_by_ownership,
    AnalysisInputs, Characteristics, Dependent, FmBlock, FmModel, Regressor, RegressorSource, SizeGroups,
};
use liqcomm::commonality::BetaEstimate;
use liqcomm::illiq::MarketDay;
use liqcomm::ingest::{DailyBar, FirmQuarterSeries, IndexMembership, OwnershipPanel, OwnershipSnapshot};
use liqcomm::rng::SimRng;
use liqcomm::types::{OwnershipCategory, Quarter, SizeGroup, StockId};
use proptest::prelude::*;

fn sid(i: usize) -> StockId {
    StockId::new(format!("S{i:02}"))
}

fn estimate(i: usize, q: Quarter, beta_l: f64, beta_hi: Option<f64>) -> BetaEstimate {
    BetaEstimate {
        stock_id: sid(i),
        quarter: q,
        beta_l,
        beta_l_se: 0.1,
        beta_hi,
        beta_hi_se: beta_hi.map(|_| 0.1),
        beta_l_joint: None,
        beta_to: None,
        autocorr: None,
        n_obs: 50,
        controls_used: "none".into(),
    }
}

fn empty_series(i: usize, q: Quarter, cap: f64) -> FirmQuarterSeries {
    FirmQuarterSeries {
        stock_id: sid(i),
        quarter: q,
        days: Vec::new(),
        levels: Vec::new(),
        trading: Vec::new(),
        lagged_market_cap: Some(cap),
    }
}

fn snapshot(i: usize, q: Quarter, category: OwnershipCategory, fraction: f64) -> OwnershipSnapshot {
    OwnershipSnapshot {
        stock_id: sid(i),
        date: q.last_day(),
        category,
        shares_held: fraction * 1e6,
        fraction: Some(fraction),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn bucket_populations() {
    assert_eq!(bucket_sizes(10, 3), vec![4, 3, 3]);
    assert_eq!(bucket_sizes(100, 10), vec![10; 10]);
    assert_eq!(bucket_sizes(7, 5), vec![2, 2, 1, 1, 1]);
}

proptest! {
    #[test]
    fn sorts_fill_buckets_in_value_order(values in proptest::collection::vec(-10.0f64..10.0, 1..120), k in 1usize..12) {
        let ids: Vec<StockId> = (0..values.len()).map(sid).collect();
        let cs: Vec<(&StockId, f64)> = ids.iter().zip(&values).map(|(i, v)| (i, *v)).collect();
        let labels = sort_assign(&cs, k).unwrap();
        let mut counts = vec![0; k];
        for l in &labels {
            counts[l - 1] += 1;
        }
        prop_assert_eq!(counts, bucket_sizes(values.len(), k));
        for a in 0..values.len() {
            for b in 0..values.len() {
                if labels[a] < labels[b] {
                    prop_assert!(values[a] <= values[b]);
                }
            }
        }
    }
}

#[test]
fn size_terciles_split_each_quarter() {
    let q1 = Quarter::new(2014, 1);
    let q2 = Quarter::new(2014, 2);
    let mut series: Vec<FirmQuarterSeries> = (0..10).map(|i| empty_series(i, q1, (i + 1) as f64)).collect();
    series.extend((0..9).map(|i| empty_series(i, q2, (100 - i) as f64)));
    let groups = size_terciles(&series);
    let count = |q: Quarter, g: SizeGroup| groups.iter().filter(|((_, qq), gg)| *qq == q && **gg == g).count();
    assert_eq!([count(q1, SizeGroup::Small), count(q1, SizeGroup::Mid), count(q1, SizeGroup::Large)], [4, 3, 3]);
    assert_eq!([count(q2, SizeGroup::Small), count(q2, SizeGroup::Mid), count(q2, SizeGroup::Large)], [3, 3, 3]);
    assert_eq!(groups[&(sid(0), q1)], SizeGroup::Small);
    assert_eq!(groups[&(sid(0), q2)], SizeGroup::Large);
}

struct World {
    chars: Characteristics,
    ownership: OwnershipPanel,
    index: IndexMembership,
}

impl World {
    fn source(&self) -> RegressorSource<'_> {
        RegressorSource {
            characteristics: &self.chars,
            ownership: &self.ownership,
            index: &self.index,
        }
    }
}

#[test]
fn quintile_spread_is_the_difference_of_extreme_means() {
    let q = Quarter::new(2014, 3);
    let mut rng = SimRng::new(51);
    let n = 50;
    let fractions: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let betas: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let world = World {
        chars: Characteristics::default(),
        ownership: OwnershipPanel::from_snapshots(
            &(0..n)
                .map(|i| snapshot(i, q.prev(), OwnershipCategory::ForeignInstitution, fractions[i]))
                .collect::<Vec<_>>(),
        ),
        index: IndexMembership::new(),
    };
    let estimates: Vec<BetaEstimate> = (0..n).map(|i| estimate(i, q, 0.0, Some(betas[i]))).collect();
    let size_groups = SizeGroups::new();
    let inputs = AnalysisInputs {
        series: &[],
        market_days: &[],
        estimates: &estimates,
        source: world.source(),
        size_groups: &size_groups,
        hi_category: OwnershipCategory::ForeignInstitution,
        nw_lags: 2,
    };
    let t = hi_beta_sorts(&inputs);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| fractions[*a].total_cmp(&fractions[*b]));
    let lo: Vec<f64> = order[..10].iter().map(|i| betas[*i]).collect();
    let hi: Vec<f64> = order[40..].iter().map(|i| betas[*i]).collect();
    let pa = "Panel A: ownership quintiles";
    assert!((t.value(pa, "All", "Q1 (Lo)").unwrap() - mean(&lo)).abs() < 1e-14);
    assert!((t.value(pa, "All", "Q5 (Hi)").unwrap() - mean(&hi)).abs() < 1e-14);
    assert!((t.value(pa, "All", "Hi-Lo").unwrap() - (mean(&hi) - mean(&lo))).abs() < 1e-14);
}

/// Twelve quarters of forty stocks with foreign ownership known a quarter ahead.
fn fm_world(seed: u64) -> (World, Vec<BetaEstimate>, SizeGroups) {
    let mut rng = SimRng::new(seed);
    let quarters: Vec<Quarter> = (0..12).scan(Quarter::new(2010, 1), |q, _| {
        *q = q.next();
        Some(*q)
    })
    .collect();
    let mut snaps = Vec::new();
    let mut estimates = Vec::new();
    let mut size_groups = SizeGroups::new();
    for q in &quarters {
        for i in 0..40 {
            let f = rng.uniform() * 0.6;
            snaps.push(snapshot(i, q.prev(), OwnershipCategory::ForeignInstitution, f));
            snaps.push(snapshot(i, q.prev(), OwnershipCategory::LocalInstitution, 0.3 * rng.uniform()));
            estimates.push(estimate(i, *q, 0.2 + 0.8 * f + 0.3 * rng.normal(), Some(rng.normal())));
            size_groups.insert((sid(i), *q), SizeGroup::from_tercile(1 + i % 3));
        }
    }
    let world = World {
        chars: Characteristics::default(),
        ownership: OwnershipPanel::from_snapshots(&snaps),
        index: IndexMembership::new(),
    };
    (world, estimates, size_groups)
}

#[test]
fn fm_table_cells_carry_the_estimates() {
    let (world, estimates, size_groups) = fm_world(52);
    let regs = [
        Regressor::Ownership(OwnershipCategory::ForeignInstitution),
        Regressor::Ownership(OwnershipCategory::LocalInstitution),
    ];
    let groups = vec![None, Some(SizeGroup::Large), Some(SizeGroup::Small)];
    let block = FmBlock {
        label: String::new(),
        estimates: &estimates,
        size_groups: &size_groups,
        dependent: Dependent::BetaL,
        models: vec![FmModel::new("M4", &regs)],
        groups: groups.clone(),
    };
    let t = fm_table("tableX", "demo", &[block], &world.source(), 2);
    for g in groups {
        let col = g.map_or("All", SizeGroup::label);
        let fm = fm_beta_on_ownership(&estimates, &world.source(), &size_groups, Dependent::BetaL, &regs, g, 2).unwrap();
        for (row, j) in [("Intercept", 0), ("Fown", 1), ("Lown", 2)] {
            let cell = t.get("M4", row, col).unwrap();
            assert_eq!(cell.value, Some(fm.mean_coefficients[j]));
            assert_eq!(cell.t_stat, Some(fm.nw_t_stats[j]));
        }
        assert_eq!(t.value("M4", "Quarters", col), Some(12.0));
    }

    // the long-format CSV keeps every value at full precision
    let text = t.to_csv().unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut seen = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let cell = t.get(&rec[1], &rec[2], &rec[3]).unwrap();
        let parsed: Option<f64> = (!rec[4].is_empty()).then(|| rec[4].parse().unwrap());
        assert_eq!(parsed, cell.value);
        seen += 1;
    }
    assert_eq!(seen, t.cells.len());
}

#[test]
fn spread_table_cells_carry_the_regression() {
    let (world, estimates, size_groups) = fm_world(53);
    let points = spread_points(&estimates, &world.source(), &size_groups);
    assert_eq!(points.len(), 12);
    let large: Vec<f64> = estimates
        .iter()
        .filter(|e| e.quarter == points[0].quarter && size_groups[&(e.stock_id.clone(), e.quarter)] == SizeGroup::Large)
        .map(|e| e.beta_l)
        .collect();
    let small: Vec<f64> = estimates
        .iter()
        .filter(|e| e.quarter == points[0].quarter && size_groups[&(e.stock_id.clone(), e.quarter)] == SizeGroup::Small)
        .map(|e| e.beta_l)
        .collect();
    assert!((points[0].spread - (mean(&large) - mean(&small))).abs() < 1e-14);

    let t = spread_table(&points, 2);
    let fit = spread_regression(&points, &[OwnershipCategory::ForeignInstitution], false, 2).unwrap();
    for (row, j) in [("Intercept", 0), ("Trend", 1), ("Fown diff", 2)] {
        let cell = t.get("", row, "M3").unwrap();
        assert_eq!(cell.value, Some(fit.coefficients[j]));
        assert_eq!(cell.t_stat, Some(fit.t_stats[j]));
    }
    // size and illiquidity differences need characteristics this world lacks
    assert_eq!(t.value("", "Intercept", "M2"), None);
    assert!(t.notes.iter().any(|n| n.starts_with("M2")));
}

#[test]
fn flat_market_has_zero_volatility() {
    let start = NaiveDate::from_ymd_opt(2013, 1, 2).unwrap();
    let days: Vec<MarketDay> = (0..120)
        .map(|k| MarketDay {
            date: start + Duration::days(k),
            n_stocks: 10,
            delta_illiq_mkt: Some(0.05),
            ret_mkt: Some(0.0),
            turnover_mkt: Some(0.01),
            turnover_change_mkt: None,
        })
        .collect();
    let fig = market_volatility_series(&days);
    assert_eq!(fig.rows.len(), 2);
    assert!(fig.column("sd_delta_illiq_mkt").unwrap().iter().all(|v| *v == Some(0.0)));
}

#[test]
fn all_positive_portfolio_betas() {
    let q = Quarter::new(2013, 2);
    let estimates: Vec<BetaEstimate> = (0..20).map(|i| estimate(i, q, 0.0, Some(0.1 + i as f64))).collect();
    let fig = hi_beta_series(&estimates);
    assert_eq!(fig.column("pct_positive").unwrap(), vec![Some(100.0)]);
    assert_eq!(fig.column("mean_beta_hi").unwrap(), vec![Some(mean(&(0..20).map(|i| 0.1 + i as f64).collect::<Vec<_>>()))]);
}

#[test]
fn holding_period_is_inverse_turnover() {
    let q = Quarter::new(2015, 2);
    let mut bars = Vec::new();
    for i in 0..30 {
        let mut d = q.prev().first_day();
        while d <= q.last_day() {
            if d.weekday().number_from_monday() <= 5 {
                // 0.4% of shares trade every day
                bars.push(DailyBar::new(sid(i), d, 10.0, Some(0.001), 0.004 * 1e6 * 10.0, 1e6));
            }
            d += Duration::days(1);
        }
    }
    let mut snaps = Vec::new();
    let mut rng = SimRng::new(54);
    for i in 0..30 {
        for cat in OwnershipCategory::ALL {
            snaps.push(snapshot(i, q.prev(), cat, 0.05 + 0.4 * rng.uniform()));
        }
    }
    let mut index = IndexMembership::new();
    for i in 0..10 {
        index.insert(sid(i), q);
    }
    let world = World {
        chars: Characteristics::from_bars(&bars),
        ownership: OwnershipPanel::from_snapshots(&snaps),
        index,
    };
    let series: Vec<FirmQuarterSeries> = (0..30).map(|i| empty_series(i, q, 1e7)).collect();
    let size_groups: SizeGroups = HashMap::new();
    let inputs = AnalysisInputs {
        series: &series,
        market_days: &[],
        estimates: &[],
        source: world.source(),
        size_groups: &size_groups,
        hi_category: OwnershipCategory::ForeignInstitution,
        nw_lags: 2,
    };
    let t = turnover_by_ownership(&inputs);
    for cat in OwnershipCategory::ALL {
        let hold = t.value("Panel B: ownership-weighted turnover", "Holding period (days)", cat.label()).unwrap();
        assert!((hold - 250.0).abs() < 1e-9, "{cat}: {hold}");
        let to = t.value("Panel B: ownership-weighted turnover", "Turnover (%)", cat.label()).unwrap();
        assert!((to - 0.4).abs() < 1e-12);
    }
    let pc = "Panel C: index vs non-index";
    assert!((t.value(pc, "Holding period (days)", "Index").unwrap() - 250.0).abs() < 1e-9);
    assert!((t.value(pc, "Holding period (days)", "Non-index").unwrap() - 250.0).abs() < 1e-9);
    assert!(matches!(t.get(pc, "Holding period (days)", "Index-Non-index").unwrap().value, Some(v) if v.abs() < 1e-9));
}
