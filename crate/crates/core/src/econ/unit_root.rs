//! Dickey-Fuller unit-root test in levels and deterministic-trend regression.
//!
//! The unit-root regression is `y_t = a + rho * y_{t-1} + g * t + v_t`; the
//! statistic `(rho_hat - 1) / se(rho_hat)` uses the homoskedastic OLS standard
//! error and is compared with MacKinnon (2010) response-surface critical values
//! `tau(T) = b_inf + b1/T + b2/T^2 + b3/T^3` (one-variable case, Table 2 of
//! MacKinnon, "Critical Values for Cointegration Tests", Queen's Economics
//! Department Working Paper 1227).

use super::ols::{ols_fit, ols_fit_hac, Design, RegressionResult};
use crate::error::{Error, Result};

/// `[b_inf, b1, b2, b3]` for the 1%, 5% and 10% levels, constant + trend.
const TAU_CT: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];

/// Same layout, constant only.
const TAU_C: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];

pub const MIN_DF_LENGTH: usize = 10;

/// Finite-sample critical values at 1%, 5% and 10% for `n_obs` regression observations.
pub fn df_critical_values(n_obs: usize, with_trend: bool) -> [f64; 3] {
    let table = if with_trend { &TAU_CT } else { &TAU_C };
    let t = n_obs as f64;
    let mut out = [0.0; 3];
    for (o, b) in out.iter_mut().zip(table.iter()) {
        *o = b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfStatistic {
    pub rho: f64,
    pub statistic: f64,
    /// 1%, 5%, 10% critical values.
    pub critical_values: [f64; 3],
    /// Unit root rejected at 5%, i.e. evidence of stationarity.
    pub reject_at_5pct: bool,
    pub n_obs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DfOutcome {
    Statistic(DfStatistic),
    /// The regression fits exactly or its design is singular; no statistic is emitted.
    Degenerate { reason: String },
}

impl DfOutcome {
    pub fn statistic(&self) -> Option<&DfStatistic> {
        match self {
            DfOutcome::Statistic(s) => Some(s),
            DfOutcome::Degenerate { .. } => None,
        }
    }
}

/// Dickey-Fuller test on `series` with drift (and a time trend when `with_trend`).
pub fn dickey_fuller(series: &[f64], with_trend: bool) -> Result<DfOutcome> {
    if series.len() < MIN_DF_LENGTH {
        return Err(Error::InsufficientData(format!(
            "dickey-fuller needs at least {MIN_DF_LENGTH} observations, got {}",
            series.len()
        )));
    }
    let n = series.len() - 1;
    let y = series[1..].to_vec();
    let mut d = Design::with_intercept(n);
    d.push("lag", series[..n].to_vec());
    if with_trend {
        d.push("trend", (2..=series.len()).map(|t| t as f64).collect());
    }
    let fit = match ols_fit(&y, &d) {
        Ok(f) => f,
        Err(Error::SingularDesign { name, .. }) => {
            return Ok(DfOutcome::Degenerate {
                reason: format!("singular design at `{name}`"),
            })
        }
        Err(e) => return Err(e),
    };
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ssr = fit.ssr();
    if ssr <= 1e-24 * sst.max(f64::MIN_POSITIVE) || ssr == 0.0 {
        return Ok(DfOutcome::Degenerate {
            reason: "zero residual variance".into(),
        });
    }
    let rho = fit.coefficients[1];
    let se = fit.classical_se(1);
    let statistic = (rho - 1.0) / se;
    let critical_values = df_critical_values(n, with_trend);
    Ok(DfOutcome::Statistic(DfStatistic {
        rho,
        statistic,
        critical_values,
        reject_at_5pct: statistic < critical_values[1],
        n_obs: n,
    }))
}

/// OLS of `series` on a constant and t = 1..T with Newey-West(`lags`) t-statistics.
pub fn trend_regression(series: &[f64], lags: usize) -> Result<RegressionResult> {
    if series.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "trend regression needs at least 4 observations, got {}",
            series.len()
        )));
    }
    let mut d = Design::with_intercept(series.len());
    d.push("trend", (1..=series.len()).map(|t| t as f64).collect());
    ols_fit_hac(series, &d, lags.min(series.len() - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptotic_critical_value_is_close_to_textbook() {
        let cv = df_critical_values(100_000, true);
        assert!((cv[1] + 3.41).abs() < 0.01);
        let cv = df_critical_values(100_000, false);
        assert!((cv[1] + 2.86).abs() < 0.01);
        let small = df_critical_values(50, true);
        assert!(small[1] < cv[1]);
        assert!(small[0] < small[1] && small[1] < small[2]);
    }

    #[test]
    fn exact_linear_series_is_degenerate() {
        let s: Vec<f64> = (1..=40).map(|t| 1.0 + 0.01 * t as f64).collect();
        assert!(matches!(dickey_fuller(&s, true).unwrap(), DfOutcome::Degenerate { .. }));
    }

    #[test]
    fn short_series_rejected() {
        assert!(dickey_fuller(&[1.0; 9], true).is_err());
    }

    #[test]
    fn exact_trend_recovered() {
        let s: Vec<f64> = (1..=30).map(|t| 0.3 + 0.002 * t as f64).collect();
        let fit = trend_regression(&s, 2).unwrap();
        assert!((fit.coefficients[0] - 0.3).abs() < 1e-12);
        assert!((fit.coefficients[1] - 0.002).abs() < 1e-13);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn constant_series_has_no_trend() {
        let fit = trend_regression(&[0.42; 12], 2).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-14);
    }
}
