use chrono::{Duration, NaiveDate};
use liqcomm::commonality::{
    estimate_high_ownership_beta, estimate_liquidity_beta, estimate_panel, estimate_volume_beta,
    return_autocorrelation, ControlSet, EstimationConfig,
};
use liqcomm::error::Error;
use liqcomm::illiq::{FactorView, MarketPanel, MarketWeighting};
use liqcomm::ingest::{DayObs, FirmQuarterSeries, TradingDay};
use liqcomm::rng::SimRng;
use liqcomm::types::{Quarter, StockId};

const N_DAYS: usize = 60;

fn dates() -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2012, 1, 2).unwrap();
    (0..N_DAYS).map(|k| start + Duration::days(k as i64)).collect()
}

fn view(delta: Vec<f64>, ret: Vec<f64>, turnover: Vec<f64>) -> FactorView {
    FactorView {
        quarter: Quarter::new(2012, 1),
        dates: dates(),
        delta: delta.into_iter().map(Some).collect(),
        ret: ret.into_iter().map(Some).collect(),
        turnover: turnover.into_iter().map(Some).collect(),
    }
}

fn noise(rng: &mut SimRng, sd: f64) -> Vec<f64> {
    (0..N_DAYS).map(|_| sd * rng.normal()).collect()
}

fn series(id: &str, delta: &[f64], weight: f64) -> FirmQuarterSeries {
    let days: Vec<DayObs> = dates()
        .into_iter()
        .zip(delta)
        .map(|(date, d)| DayObs {
            date,
            delta_illiq: *d,
            illiq: 1e-8,
            ret: 0.0,
            dollar_volume: 1e5,
            turnover: 0.01,
            market_cap: weight,
            weight,
        })
        .collect();
    let trading = days
        .iter()
        .map(|d| TradingDay {
            date: d.date,
            ret: Some(d.ret),
            turnover: d.turnover,
        })
        .collect();
    FirmQuarterSeries {
        stock_id: StockId::new(id),
        quarter: Quarter::new(2012, 1),
        days,
        levels: Vec::new(),
        trading,
        lagged_market_cap: Some(weight),
    }
}

fn factor_only() -> EstimationConfig {
    EstimationConfig {
        controls: ControlSet::None,
        min_obs: 20,
        ..EstimationConfig::default()
    }
}

#[test]
fn recovers_a_common_loading_across_firms() {
    let mut rng = SimRng::new(41);
    let mkt = noise(&mut rng, 0.3);
    let v = view(mkt.clone(), noise(&mut rng, 0.01), vec![0.01; N_DAYS]);
    let mut betas = Vec::new();
    for i in 0..500 {
        let e = noise(&mut rng, 0.3);
        let y: Vec<f64> = mkt.iter().zip(&e).map(|(m, e)| 0.7 * m + e).collect();
        let fit = estimate_liquidity_beta(&series(&format!("F{i}"), &y, 1.0), &v, &factor_only()).unwrap();
        betas.push(fit.coefficient("mkt").unwrap());
    }
    let n = betas.len() as f64;
    let mean = betas.iter().sum::<f64>() / n;
    let sd = (betas.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 0.7).abs() < 3.0 * sd / n.sqrt(), "mean {mean}, sd {sd}");
}

#[test]
fn firm_equal_to_its_own_market_has_unit_beta_without_exclusion() {
    let mut rng = SimRng::new(42);
    let a = noise(&mut rng, 0.4);
    let b = noise(&mut rng, 0.4);
    let panel = [series("A", &a, 3.0), series("B", &b, 1.0)];
    let market = MarketPanel::build(&panel, MarketWeighting::Value);
    // A and B together: the firm whose changes equal the aggregate
    let agg: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (3.0 * x + y) / 4.0).collect();
    let copy = series("C", &agg, 1.0);
    let fit = estimate_liquidity_beta(&copy, &market.view(&copy, false), &factor_only()).unwrap();
    assert!((fit.coefficient("mkt").unwrap() - 1.0).abs() < 1e-12);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn portfolio_equal_to_the_market_is_rejected_as_collinear() {
    let mut rng = SimRng::new(43);
    let mkt = noise(&mut rng, 0.3);
    let v = view(mkt.clone(), noise(&mut rng, 0.01), vec![0.01; N_DAYS]);
    let hi: Vec<Option<f64>> = mkt.iter().copied().map(Some).collect();
    let y = noise(&mut rng, 0.3);
    let err = estimate_high_ownership_beta(&series("A", &y, 1.0), &v, &hi, &factor_only()).unwrap_err();
    assert!(matches!(err, Error::SingularDesign { .. }), "{err}");
}

#[test]
fn exact_portfolio_copy_has_unit_portfolio_beta() {
    let mut rng = SimRng::new(44);
    let mkt = noise(&mut rng, 0.3);
    let hi_vals = noise(&mut rng, 0.3);
    let v = view(mkt, noise(&mut rng, 0.01), vec![0.01; N_DAYS]);
    let hi: Vec<Option<f64>> = hi_vals.iter().copied().map(Some).collect();
    for controls in [ControlSet::None, ControlSet::Full] {
        let cfg = EstimationConfig {
            controls,
            ..factor_only()
        };
        let mut s = series("A", &hi_vals, 1.0);
        for (d, r) in s.days.iter_mut().zip(noise(&mut rng, 0.02)) {
            d.ret = r;
        }
        let fit = estimate_high_ownership_beta(&s, &v, &hi, &cfg).unwrap();
        assert!((fit.coefficient("hi").unwrap() - 1.0).abs() < 1e-10);
        assert!(fit.coefficient("mkt").unwrap().abs() < 1e-10);
    }
}

/// Firm turnover whose daily percentage change is `k` times the market's.
fn scaled_turnover_series(market_turnover: &[f64], k: f64) -> FirmQuarterSeries {
    let mut s = series("V", &[0.0; N_DAYS], 1.0);
    let mut level = 0.02;
    for (j, t) in s.trading.iter_mut().enumerate() {
        if j > 0 {
            let g = (market_turnover[j] - market_turnover[j - 1]) / market_turnover[j - 1];
            level *= 1.0 + k * g;
        }
        t.turnover = level;
    }
    s
}

#[test]
fn volume_beta_examples() {
    let mut rng = SimRng::new(45);
    let to: Vec<f64> = (0..N_DAYS).map(|_| 0.01 * (1.0 + 0.2 * rng.uniform())).collect();
    let v = view(vec![0.0; N_DAYS], vec![0.0; N_DAYS], to.clone());
    for k in [1.0, 2.0] {
        let fit = estimate_volume_beta(&scaled_turnover_series(&to, k), &v).unwrap();
        assert!((fit.coefficient("turnover_mkt").unwrap() - k).abs() < 1e-10);
        assert_eq!(fit.n_obs, N_DAYS - 1);
    }
}

#[test]
fn volume_beta_needs_ten_changes() {
    let to = vec![0.01; N_DAYS];
    let v = view(vec![0.0; N_DAYS], vec![0.0; N_DAYS], to.clone());
    let mut s = scaled_turnover_series(&to, 1.0);
    s.trading.truncate(10);
    assert!(matches!(estimate_volume_beta(&s, &v), Err(Error::InsufficientData(_))));
}

#[test]
fn autocorrelation_of_independent_returns_is_slightly_negative() {
    let mut rng = SimRng::new(46);
    let n = 60;
    let reps = 20_000;
    let vals: Vec<f64> = (0..reps)
        .map(|_| {
            let r: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            return_autocorrelation(&r).unwrap()
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / reps as f64;
    let se = (1.0 / n as f64).sqrt() / (reps as f64).sqrt();
    let expected = -1.0 / (n as f64 - 1.0);
    assert!((mean - expected).abs() < 3.0 * se, "mean {mean}, expected {expected}");
}

#[test]
fn autocorrelation_undefined_for_constant_returns() {
    assert_eq!(return_autocorrelation(&[0.01; 40]), None);
    assert_eq!(return_autocorrelation(&[0.01, 0.02]), None);
}

#[test]
fn exclusion_removes_a_dominant_firm_from_its_own_factor() {
    let mut rng = SimRng::new(47);
    let common = noise(&mut rng, 0.3);
    let mut panel: Vec<FirmQuarterSeries> = (0..20)
        .map(|i| {
            let y: Vec<f64> = common.iter().zip(noise(&mut rng, 0.1)).map(|(c, e)| c + e).collect();
            series(&format!("F{i:02}"), &y, 1.0)
        })
        .collect();
    panel.push(series("ZZ", &noise(&mut rng, 0.3), 1e9));
    let market = MarketPanel::build(&panel, MarketWeighting::Value);
    let beta_of = |leave_one_out: bool| {
        let cfg = EstimationConfig {
            leave_one_out,
            ..factor_only()
        };
        let out = estimate_panel(&panel, &market, None, &cfg);
        out.estimates.iter().find(|e| e.stock_id.as_str() == "ZZ").unwrap().beta_l
    };
    assert!((beta_of(false) - 1.0).abs() < 1e-6);
    assert!(beta_of(true).abs() < 0.3, "{}", beta_of(true));
}

#[test]
fn first_and_last_market_days_are_not_regressed() {
    let mut rng = SimRng::new(48);
    let mkt = noise(&mut rng, 0.3);
    let v = view(mkt, noise(&mut rng, 0.01), vec![0.01; N_DAYS]);
    let y = noise(&mut rng, 0.3);
    for controls in [ControlSet::None, ControlSet::Full] {
        let cfg = EstimationConfig {
            controls,
            ..factor_only()
        };
        let mut s = series("A", &y, 1.0);
        for (d, r) in s.days.iter_mut().zip(noise(&mut rng, 0.02)) {
            d.ret = r;
        }
        assert_eq!(estimate_liquidity_beta(&s, &v, &cfg).unwrap().n_obs, N_DAYS - 2);
        s.days.remove(30);
        assert_eq!(estimate_liquidity_beta(&s, &v, &cfg).unwrap().n_obs, N_DAYS - 3);
    }
}

#[test]
fn full_controls_drop_days_with_undefined_neighbours() {
    let mut rng = SimRng::new(49);
    let mut v = view(noise(&mut rng, 0.3), noise(&mut rng, 0.01), vec![0.01; N_DAYS]);
    v.delta[20] = None;
    let mut s = series("A", &noise(&mut rng, 0.3), 1.0);
    for (d, r) in s.days.iter_mut().zip(noise(&mut rng, 0.02)) {
        d.ret = r;
    }
    let none = estimate_liquidity_beta(&s, &v, &factor_only()).unwrap();
    assert_eq!(none.n_obs, N_DAYS - 3);
    let full = estimate_liquidity_beta(
        &s,
        &v,
        &EstimationConfig {
            controls: ControlSet::Full,
            ..factor_only()
        },
    )
    .unwrap();
    // day 20 itself plus the two days that use it as lead or lag
    assert_eq!(full.n_obs, N_DAYS - 5);
    assert_eq!(full.names.len(), 1 + 1 + 2 + 3 + 1);
}
