//! Daily illiquidity measures and the market / high-ownership aggregates.
//!
//! Amihud values are stored raw as `|r| / dollar volume`; no display scaling
//! is applied here.

mod market;
mod portfolio;

pub use market::{
    market_delta_illiq, write_market_days, Contribution, FactorView, MarketDay, MarketPanel, MarketWeighting,
};
pub use portfolio::{high_ownership_portfolio_illiq, HiDay, HiMembership, HiPortfolio};

/// Amihud price impact `|ret| / dollar_volume`; `None` when either side is zero.
pub fn amihud_daily(ret: f64, dollar_volume: f64) -> Option<f64> {
    if !ret.is_finite() || !dollar_volume.is_finite() || ret == 0.0 || dollar_volume == 0.0 {
        return None;
    }
    Some(ret.abs() / dollar_volume.abs())
}

/// Log change between two defined illiquidity levels.
pub fn delta_illiq(illiq: f64, illiq_prev: f64) -> Option<f64> {
    if illiq > 0.0 && illiq_prev > 0.0 && illiq.is_finite() && illiq_prev.is_finite() {
        Some((illiq / illiq_prev).ln())
    } else {
        None
    }
}

/// Share volume over shares outstanding.
pub fn turnover_daily(volume: f64, shares_outstanding: f64) -> f64 {
    volume / shares_outstanding
}

/// Quoted spread as a fraction of the closing price.
pub fn quoted_spread_pct(spread: Option<f64>, close: f64) -> Option<f64> {
    spread.map(|s| s / close)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amihud_examples() {
        assert!((amihud_daily(0.02, 1_000_000.0).unwrap() - 2.0e-8).abs() < 1e-22);
        assert!((amihud_daily(-0.05, 500_000.0).unwrap() - 1.0e-7).abs() < 1e-21);
        assert_eq!(amihud_daily(0.0, 1e6), None);
        assert_eq!(amihud_daily(0.01, 0.0), None);
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_illiq(3e-8, 3e-8), Some(0.0));
        let e = std::f64::consts::E;
        assert!((delta_illiq(e * 1e-8, 1e-8).unwrap() - 1.0).abs() < 1e-15);
        assert!((delta_illiq(1e-8 / (e * e), 1e-8).unwrap() + 2.0).abs() < 1e-15);
        assert_eq!(delta_illiq(0.0, 1e-8), None);
    }

    #[test]
    fn turnover_and_spread() {
        assert_eq!(turnover_daily(1_000.0, 100_000.0), 0.01);
        assert_eq!(turnover_daily(0.0, 100_000.0), 0.0);
        assert_eq!(quoted_spread_pct(Some(0.01), 1.0), Some(0.01));
        assert_eq!(quoted_spread_pct(Some(0.0), 1.0), Some(0.0));
        assert_eq!(quoted_spread_pct(Some(0.03), 2.0), Some(0.015));
        assert_eq!(quoted_spread_pct(None, 2.0), None);
    }
}
