//! Newey-West heteroskedasticity and autocorrelation consistent covariance.
//!
//! ```text
//! V = (X'X)^{-1} S (X'X)^{-1}
//! S = sum_t e_t^2 x_t x_t' + sum_{j=1..L} w_j sum_{t>j} e_t e_{t-j} (x_t x_{t-j}' + x_{t-j} x_t')
//! w_j = 1 - j / (L + 1)
//! ```
//!
//! No small-sample scaling is applied, so `L = 0` is exactly the White (HC0)
//! sandwich.

use nalgebra::DMatrix;

use super::ols::{factorize, symmetrize, Design};
use crate::error::{Error, Result};

/// Bartlett kernel weight for lag `j` with truncation `lags`.
pub fn bartlett_weight(j: usize, lags: usize) -> f64 {
    if j > lags {
        0.0
    } else {
        1.0 - j as f64 / (lags as f64 + 1.0)
    }
}

/// The "meat" matrix `S` above.
pub(crate) fn hac_meat(residuals: &[f64], x: &DMatrix<f64>, lags: usize) -> DMatrix<f64> {
    let n = x.nrows();
    let k = x.ncols();
    // scores u_t = e_t x_t, stored as a k x n matrix
    let mut u = x.transpose();
    for (t, e) in residuals.iter().enumerate() {
        u.column_mut(t).scale_mut(*e);
    }
    let mut s = &u * u.transpose();
    for j in 1..=lags.min(n.saturating_sub(1)) {
        let w = bartlett_weight(j, lags);
        let lead = u.columns(j, n - j);
        let lag = u.columns(0, n - j);
        let gamma = lead * lag.transpose();
        s += (&gamma + gamma.transpose()) * w;
    }
    debug_assert_eq!(s.nrows(), k);
    s
}

/// Newey-West covariance of OLS coefficients given the residuals of a fit on `design`.
pub fn nw_hac_cov(residuals: &[f64], design: &Design, lags: usize) -> Result<DMatrix<f64>> {
    let n = design.n_rows();
    if residuals.len() != n {
        return Err(Error::InsufficientData(format!(
            "{} residuals for a design with {n} rows",
            residuals.len()
        )));
    }
    if lags >= n {
        return Err(Error::LagsTooLarge { lags, n_obs: n });
    }
    // The bread does not depend on the response; any finite vector will do.
    let fac = factorize(&vec![0.0; n], design)?;
    let meat = hac_meat(residuals, &design.matrix(), lags);
    Ok(symmetrize(&(&fac.xtx_inv * meat * &fac.xtx_inv)))
}

/// Newey-West variance of the sample mean of `series` (the series regressed on a constant).
pub fn nw_variance_of_mean(series: &[f64], lags: usize) -> Result<f64> {
    let n = series.len();
    if n == 0 {
        return Err(Error::InsufficientData("empty series".into()));
    }
    if lags >= n {
        return Err(Error::LagsTooLarge { lags, n_obs: n });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let e: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let mut s: f64 = e.iter().map(|v| v * v).sum();
    for j in 1..=lags {
        let w = bartlett_weight(j, lags);
        let g: f64 = (j..n).map(|t| e[t] * e[t - j]).sum();
        s += 2.0 * w * g;
    }
    Ok(s / (n as f64 * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econ::ols::ols_fit;

    #[test]
    fn bartlett_weights() {
        assert_eq!(bartlett_weight(0, 2), 1.0);
        assert!((bartlett_weight(1, 2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((bartlett_weight(2, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(bartlett_weight(3, 2), 0.0);
    }

    #[test]
    fn lag_zero_is_white_sandwich() {
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| 1.0 + 0.5 * v + ((i * i) % 5) as f64 * 0.1).collect();
        let mut d = Design::with_intercept(12);
        d.push("x", x.clone());
        let fit = ols_fit(&y, &d).unwrap();
        let v = nw_hac_cov(&fit.residuals, &d, 0).unwrap();

        // explicit sandwich
        let xm = d.matrix();
        let xtx_inv = (xm.transpose() * &xm).try_inverse().unwrap();
        let mut meat = DMatrix::zeros(2, 2);
        for t in 0..12 {
            let row = xm.row(t).transpose();
            meat += &row * row.transpose() * fit.residuals[t].powi(2);
        }
        let white = &xtx_inv * meat * &xtx_inv;
        assert!((v - white).abs().max() < 1e-12);
    }

    #[test]
    fn lags_must_be_below_sample_size() {
        let d = Design::with_intercept(3);
        assert!(matches!(
            nw_hac_cov(&[0.1, -0.2, 0.1], &d, 3),
            Err(Error::LagsTooLarge { lags: 3, n_obs: 3 })
        ));
    }

    #[test]
    fn variance_of_mean_matches_constant_regression() {
        let s = [0.3, 0.1, 0.5, 0.2, 0.4, 0.35, 0.15, 0.28];
        let d = Design::with_intercept(s.len());
        let fit = crate::econ::ols::ols_fit_hac(&s, &d, 2).unwrap();
        let v = nw_variance_of_mean(&s, 2).unwrap();
        assert!((fit.hac_covariance[(0, 0)] - v).abs() < 1e-15);
    }
}
