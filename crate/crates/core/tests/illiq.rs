use chrono::{Duration, NaiveDate};
use liqcomm::illiq::{
    amihud_daily, market_delta_illiq, Contribution, HiMembership, HiPortfolio, MarketPanel, MarketWeighting,
};
use liqcomm::ingest::{build_firm_quarters, DailyBar, DayObs, FilterConfig, FirmQuarterSeries, LevelObs, TickSchedule};
use liqcomm::rng::SimRng;
use liqcomm::types::{Quarter, StockId};
use proptest::prelude::*;

fn day0() -> NaiveDate {
    NaiveDate::from_ymd_opt(2011, 4, 1).unwrap()
}

/// A random firm-quarter on a subset of the first `span` days of 2011Q2.
fn random_series(rng: &mut SimRng, id: usize, span: i64) -> FirmQuarterSeries {
    let mut days = Vec::new();
    let mut levels = Vec::new();
    for k in 0..span {
        if rng.uniform() < 0.25 {
            continue;
        }
        let date = day0() + Duration::days(k);
        let illiq = 1e-8 * (1.0 + rng.uniform() * 5.0);
        let weight = 1e6 * (0.1 + rng.uniform() * 20.0);
        levels.push(LevelObs {
            date,
            illiq,
            weight: Some(weight),
        });
        days.push(DayObs {
            date,
            delta_illiq: rng.normal() * 0.5,
            illiq,
            ret: rng.normal() * 0.02,
            dollar_volume: 1e5,
            turnover: rng.uniform() * 0.01,
            market_cap: weight,
            weight,
        });
    }
    FirmQuarterSeries {
        stock_id: StockId::new(format!("S{id:03}")),
        quarter: Quarter::new(2011, 2),
        days,
        levels,
        trading: Vec::new(),
        lagged_market_cap: Some(1e6),
    }
}

fn panel(seed: u64, n: usize) -> Vec<FirmQuarterSeries> {
    let mut rng = SimRng::new(seed);
    (0..n).map(|i| random_series(&mut rng, i, 40)).collect()
}

fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= tol * y.abs().max(1.0),
        (None, None) => true,
        _ => false,
    }
}

/// Direct weighted mean over the stocks present on `date`, skipping `skip`.
fn direct_mean(series: &[FirmQuarterSeries], skip: Option<usize>, date: NaiveDate) -> Option<f64> {
    let contributions: Vec<Contribution> = series
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .filter_map(|(_, s)| s.days.iter().find(|d| d.date == date))
        .map(|d| Contribution {
            weight: d.weight,
            value: d.delta_illiq,
        })
        .collect();
    market_delta_illiq(&contributions, MarketWeighting::Value, None)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn leave_one_out_matches_recomputation(seed in 0u64..100_000, n in 2usize..12) {
        let series = panel(seed, n);
        let full = MarketPanel::build(&series, MarketWeighting::Value);
        for (i, s) in series.iter().enumerate() {
            let view = full.view(s, true);
            for (k, date) in view.dates.iter().enumerate() {
                prop_assert!(close(view.delta[k], direct_mean(&series, Some(i), *date), 1e-12));
            }
        }
    }

    #[test]
    fn contribution_exclusion_matches_dropping_the_entry(
        ws in proptest::collection::vec((0.01f64..100.0, -3.0f64..3.0), 3..30),
        pick in 0usize..30,
    ) {
        let cs: Vec<Contribution> = ws.iter().map(|(w, v)| Contribution { weight: *w, value: *v }).collect();
        let i = pick % cs.len();
        let mut rest = cs.clone();
        rest.remove(i);
        for weighting in [MarketWeighting::Value, MarketWeighting::Equal] {
            prop_assert!(close(
                market_delta_illiq(&cs, weighting, Some(i)),
                market_delta_illiq(&rest, weighting, None),
                1e-12,
            ));
        }
    }
}

#[test]
fn view_excluding_self_equals_panel_without_the_firm() {
    let series = panel(11, 25);
    let full = MarketPanel::build(&series, MarketWeighting::Value);
    for i in [0, 7, 24] {
        let mut others = series.clone();
        others.remove(i);
        let without = MarketPanel::build(&others, MarketWeighting::Value);
        let a = full.view(&series[i], true);
        let b = without.view(&series[i], false);
        assert_eq!(a.dates, b.dates);
        for k in 0..a.dates.len() {
            assert!(close(a.delta[k], b.delta[k], 1e-12));
            assert!(close(a.ret[k], b.ret[k], 1e-12));
            assert!(close(a.turnover[k], b.turnover[k], 1e-12));
        }
    }
}

#[test]
fn equal_weighting_is_the_arithmetic_mean() {
    let series = panel(12, 9);
    let days = MarketPanel::build(&series, MarketWeighting::Equal).days();
    for d in days {
        let vals: Vec<f64> = series
            .iter()
            .filter_map(|s| s.days.iter().find(|o| o.date == d.date))
            .map(|o| o.delta_illiq)
            .collect();
        assert_eq!(vals.len(), d.n_stocks);
        let want = (vals.len() >= 2).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
        assert!(close(d.delta_illiq_mkt, want, 1e-12), "{}", d.date);
    }
}

fn bars(ret_dvol: &[(f64, f64)]) -> Vec<DailyBar> {
    ret_dvol
        .iter()
        .enumerate()
        .map(|(i, (r, v))| {
            let ret = (i > 0).then_some(*r);
            DailyBar::new("AAA", NaiveDate::from_ymd_opt(2010, 1, 4).unwrap() + Duration::days(i as i64), 4.0, ret, *v, 1e6)
        })
        .collect()
}

fn random_path(seed: u64, n: usize) -> Vec<(f64, f64)> {
    let mut rng = SimRng::new(seed);
    (0..n)
        .map(|_| (0.001 + rng.uniform() * 0.05, 1e4 * (1.0 + rng.uniform() * 50.0)))
        .collect()
}

fn unfiltered() -> FilterConfig {
    FilterConfig {
        winsor_fraction: 0.0,
        min_obs_per_quarter: 2,
        ..FilterConfig::default()
    }
}

#[test]
fn changes_telescope_to_the_level_ratio() {
    let path = random_path(21, 50);
    let out = build_firm_quarters(&bars(&path), &unfiltered(), &TickSchedule::default()).unwrap();
    assert_eq!(out.series.len(), 1);
    for s in &out.series {
        let sum: f64 = s.days.iter().map(|d| d.delta_illiq).sum();
        let first = s.levels.first().unwrap().illiq;
        let last = s.levels.last().unwrap().illiq;
        let direct_first = amihud_daily(path[1].0, path[1].1).unwrap();
        assert_eq!(first, direct_first);
        assert!((sum - (last / first).ln()).abs() < 1e-12, "{sum} vs {}", (last / first).ln());
    }
}

#[test]
fn changes_do_not_depend_on_dollar_volume_units() {
    let path = random_path(22, 60);
    let base = build_firm_quarters(&bars(&path), &unfiltered(), &TickSchedule::default()).unwrap();
    for c in [1e-3, 7.0, 1e6] {
        let scaled: Vec<(f64, f64)> = path.iter().map(|(r, v)| (*r, v * c)).collect();
        let out = build_firm_quarters(&bars(&scaled), &unfiltered(), &TickSchedule::default()).unwrap();
        for (a, b) in base.series.iter().zip(&out.series) {
            assert_eq!(a.days.len(), b.days.len());
            for (x, y) in a.days.iter().zip(&b.days) {
                assert!((x.delta_illiq - y.delta_illiq).abs() < 1e-12);
                assert!((x.illiq / y.illiq / c - 1.0).abs() < 1e-12);
            }
        }
    }
}

fn level_series(id: &str, levels: &[(i64, f64, f64)]) -> FirmQuarterSeries {
    FirmQuarterSeries {
        stock_id: StockId::new(id),
        quarter: Quarter::new(2011, 2),
        days: Vec::new(),
        levels: levels
            .iter()
            .map(|(k, illiq, w)| LevelObs {
                date: day0() + Duration::days(*k),
                illiq: *illiq,
                weight: Some(*w),
            })
            .collect(),
        trading: Vec::new(),
        lagged_market_cap: Some(1.0),
    }
}

fn members(ids: &[&str]) -> HiMembership {
    let mut m = HiMembership::new();
    for id in ids {
        m.insert(Quarter::new(2011, 2), StockId::new(*id));
    }
    m
}

#[test]
fn single_member_portfolio_tracks_that_stock() {
    let s = level_series("A", &[(0, 2e-8, 5.0), (1, 3e-8, 6.0), (2, 1.5e-8, 7.0)]);
    let days = HiPortfolio::build(std::slice::from_ref(&s), &members(&["A"])).days();
    assert_eq!(days.len(), 3);
    assert_eq!(days[0].delta_illiq_hi, None);
    assert!((days[1].delta_illiq_hi.unwrap() - 1.5f64.ln()).abs() < 1e-15);
    assert!((days[2].delta_illiq_hi.unwrap() - 0.5f64.ln()).abs() < 1e-15);
}

#[test]
fn two_members_halving_gives_minus_log_two() {
    let series = [
        level_series("A", &[(0, 2e-8, 1.0), (1, 1e-8, 1.0)]),
        level_series("B", &[(0, 2e-8, 1.0), (1, 1e-8, 1.0)]),
        level_series("C", &[(0, 9e-8, 1.0), (1, 9e-7, 1.0)]),
    ];
    let days = HiPortfolio::build(&series, &members(&["A", "B"])).days();
    assert_eq!(days[1].n_members, 2);
    assert!((days[1].delta_illiq_hi.unwrap() + std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn portfolio_matches_direct_level_averages() {
    let mut rng = SimRng::new(31);
    let ids: Vec<String> = (0..10).map(|i| format!("S{i}")).collect();
    let series: Vec<FirmQuarterSeries> = ids
        .iter()
        .map(|id| {
            let mut lv: Vec<(i64, f64, f64)> = Vec::new();
            for k in 0..30 {
                if rng.uniform() > 0.2 {
                    lv.push((k, 1e-8 * (0.5 + rng.uniform() * 4.0), 1e5 * (1.0 + rng.uniform() * 9.0)));
                }
            }
            level_series(id, &lv)
        })
        .collect();
    let chosen = [ids[1].as_str(), ids[4].as_str(), ids[5].as_str(), ids[8].as_str()];
    let m = members(&chosen);
    let port = HiPortfolio::build(&series, &m);
    let avg = |k: i64, skip: Option<&str>| -> Option<f64> {
        let date = day0() + Duration::days(k);
        let (mut w, mut wx) = (0.0, 0.0);
        for s in series.iter().filter(|s| m.contains(s.quarter, &s.stock_id)) {
            if Some(s.stock_id.as_str()) == skip {
                continue;
            }
            if let Some(l) = s.levels.iter().find(|l| l.date == date) {
                w += l.weight.unwrap();
                wx += l.weight.unwrap() * l.illiq;
            }
        }
        (w > 0.0).then(|| wx / w)
    };
    let direct = |skip: Option<&str>| -> Vec<(NaiveDate, Option<f64>)> {
        let mut prev: Option<f64> = None;
        let mut out = Vec::new();
        for k in 0..30 {
            if let Some(l) = avg(k, skip) {
                out.push((day0() + Duration::days(k), prev.map(|p| (l / p).ln())));
                prev = Some(l);
            }
        }
        out
    };

    let days = port.days();
    let want = direct(None);
    assert_eq!(days.len(), want.len());
    for (d, (date, delta)) in days.iter().zip(&want) {
        assert_eq!(d.date, *date);
        assert!(close(d.delta_illiq_hi, *delta, 1e-12));
    }

    // a member's view leaves its own level out before taking changes
    let dates: Vec<NaiveDate> = (0..30).map(|k| day0() + Duration::days(k)).collect();
    let member = series.iter().find(|s| s.stock_id.as_str() == chosen[2]).unwrap();
    let view = port.view(member, true, &dates);
    let want = direct(Some(chosen[2]));
    for (date, delta) in want {
        let k = dates.binary_search(&date).unwrap();
        assert!(close(view[k], delta, 1e-12), "{date}");
    }
}
