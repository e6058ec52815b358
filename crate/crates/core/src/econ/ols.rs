//! Least squares via Householder QR on a column-equilibrated design.

use nalgebra::{DMatrix, DVector};

use super::hac::hac_meat;
use crate::error::{Error, Result};
use crate::types::TStat;

/// A named design matrix, stored column-major.
#[derive(Debug, Clone)]
pub struct Design {
    n_rows: usize,
    names: Vec<String>,
    data: Vec<f64>,
}

impl Design {
    pub fn new(n_rows: usize) -> Self {
        Design {
            n_rows,
            names: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Starts a design whose first column is the constant 1.
    pub fn with_intercept(n_rows: usize) -> Self {
        let mut d = Design::new(n_rows);
        d.push("intercept", vec![1.0; n_rows]);
        d
    }

    pub fn push(&mut self, name: impl Into<String>, column: Vec<f64>) -> &mut Self {
        assert_eq!(column.len(), self.n_rows, "column length must match design rows");
        self.names.push(name.into());
        self.data.extend(column);
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n_rows, self.n_cols(), &self.data)
    }

    /// Builds a design from a dense matrix with generated column names.
    pub fn from_matrix(x: &DMatrix<f64>) -> Self {
        let mut d = Design::new(x.nrows());
        for j in 0..x.ncols() {
            d.push(format!("x{j}"), x.column(j).iter().copied().collect());
        }
        d
    }
}

/// Output of any fitted linear regression.
#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Newey-West covariance with `lag_used` lags (lag 0 is the White sandwich).
    pub hac_covariance: DMatrix<f64>,
    pub t_stats: Vec<TStat>,
    /// Homoskedastic covariance `s^2 (X'X)^{-1}` with `s^2 = SSR / (n - k)`.
    pub classical_covariance: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub lag_used: usize,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|j| self.coefficients[j])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn hac_se(&self, j: usize) -> f64 {
        self.hac_covariance[(j, j)].max(0.0).sqrt()
    }

    pub fn classical_se(&self, j: usize) -> f64 {
        self.classical_covariance[(j, j)].max(0.0).sqrt()
    }

    pub fn ssr(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }
}

/// Factorization of a full-rank design reused by the OLS and HAC routines.
pub(crate) struct Factorized {
    pub coefficients: DVector<f64>,
    /// `(X'X)^{-1}` in the original column scale.
    pub xtx_inv: DMatrix<f64>,
}

pub(crate) fn factorize(y: &[f64], design: &Design) -> Result<Factorized> {
    let n = design.n_rows();
    let k = design.n_cols();
    if y.len() != n {
        return Err(Error::InsufficientData(format!(
            "response has {} rows but design has {n}",
            y.len()
        )));
    }
    if k == 0 || n <= k {
        return Err(Error::InsufficientData(format!(
            "need more observations ({n}) than regressors ({k})"
        )));
    }
    if let Some(bad) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::InsufficientData(format!("non-finite response at row {bad}")));
    }

    let mut scales = Vec::with_capacity(k);
    for j in 0..k {
        let col = design.column(j);
        if let Some(bad) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::InsufficientData(format!(
                "non-finite value in column `{}` at row {bad}",
                design.names()[j]
            )));
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::SingularDesign {
                index: j,
                name: design.names()[j].clone(),
            });
        }
        scales.push(norm);
    }

    let mut xs = design.matrix();
    for (j, s) in scales.iter().enumerate() {
        xs.column_mut(j).unscale_mut(*s);
    }

    let qr = xs.qr();
    let r = qr.r();
    let max_diag = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let tol = f64::EPSILON * n.max(k) as f64 * max_diag;
    if let Some(j) = (0..k).find(|&j| r[(j, j)].abs() <= tol) {
        return Err(Error::SingularDesign {
            index: j,
            name: design.names()[j].clone(),
        });
    }

    let q = qr.q();
    let qty = q.transpose() * DVector::from_column_slice(y);
    let coef_scaled = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign {
            index: k - 1,
            name: design.names()[k - 1].clone(),
        })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .expect("triangular factor checked for rank above");
    let mut xtx_inv = &r_inv * r_inv.transpose();

    let mut coefficients = coef_scaled;
    for j in 0..k {
        coefficients[j] /= scales[j];
        for i in 0..k {
            xtx_inv[(i, j)] /= scales[i] * scales[j];
        }
    }
    Ok(Factorized {
        coefficients,
        xtx_inv,
    })
}

/// Ordinary least squares with the White (lag 0) covariance.
pub fn ols_fit(y: &[f64], design: &Design) -> Result<RegressionResult> {
    ols_fit_hac(y, design, 0)
}

/// Ordinary least squares with Newey-West standard errors using `lags` lags.
pub fn ols_fit_hac(y: &[f64], design: &Design, lags: usize) -> Result<RegressionResult> {
    let n = design.n_rows();
    let k = design.n_cols();
    if lags >= n {
        return Err(Error::LagsTooLarge { lags, n_obs: n });
    }
    let fac = factorize(y, design)?;
    let x = design.matrix();
    let fitted = &x * &fac.coefficients;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();

    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        1.0 - ssr / sst
    } else {
        // constant response: the intercept reproduces it exactly
        1.0
    };

    let meat = hac_meat(&residuals, &x, lags);
    let hac = symmetrize(&(&fac.xtx_inv * meat * &fac.xtx_inv));
    let sigma2 = ssr / (n - k) as f64;
    let classical = &fac.xtx_inv * sigma2;

    let coefficients: Vec<f64> = fac.coefficients.iter().copied().collect();
    let y_scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let t_stats = coefficients
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let se = hac[(j, j)].max(0.0).sqrt();
            let col_scale = design.column(j).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            // se is compared with the response scale expressed in coefficient units
            TStat::from_ratio(b, se, (y_scale / col_scale).max(b.abs()))
        })
        .collect();

    Ok(RegressionResult {
        names: design.names().to_vec(),
        coefficients,
        hac_covariance: hac,
        t_stats,
        classical_covariance: classical,
        residuals,
        r_squared,
        n_obs: n,
        lag_used: lags,
    })
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}
