//! Fama-MacBeth two-pass estimation.
//!
//! Each period gets its own cross-sectional OLS; the reported coefficient is
//! the time-series mean, and its t-statistic comes from Newey-West applied to
//! the coefficient series regressed on a constant.

use nalgebra::DMatrix;

use super::hac::nw_variance_of_mean;
use super::ols::{ols_fit, Design};
use crate::error::{Error, Result};
use crate::types::TStat;

/// One period's cross-section.
#[derive(Debug, Clone)]
pub struct CrossSection {
    pub label: String,
    pub y: Vec<f64>,
    pub design: Design,
}

#[derive(Debug, Clone)]
pub struct SkippedPeriod {
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct FMResult {
    pub names: Vec<String>,
    pub mean_coefficients: Vec<f64>,
    pub nw_t_stats: Vec<TStat>,
    pub nw_std_errors: Vec<f64>,
    /// Rows are periods, columns are coefficients.
    pub per_period_coefficients: DMatrix<f64>,
    pub period_labels: Vec<String>,
    pub n_periods: usize,
    pub mean_r_squared: f64,
    pub mean_n_obs: f64,
    pub skipped: Vec<SkippedPeriod>,
    pub lags: usize,
}

impl FMResult {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Runs the two-pass procedure; periods whose design is rank deficient are skipped.
pub fn fama_macbeth(cross_sections: &[CrossSection], lags: usize) -> Result<FMResult> {
    let total = cross_sections.len();
    if total == 0 {
        return Err(Error::InsufficientData("no cross-sections".into()));
    }
    let names = cross_sections[0].design.names().to_vec();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut skipped = Vec::new();
    let mut r2_sum = 0.0;
    let mut n_sum = 0.0;

    for cs in cross_sections {
        if cs.design.names() != names.as_slice() {
            return Err(Error::Config(format!(
                "period {} has regressors {:?}, expected {:?}",
                cs.label,
                cs.design.names(),
                names
            )));
        }
        match ols_fit(&cs.y, &cs.design) {
            Ok(fit) => {
                r2_sum += fit.r_squared;
                n_sum += fit.n_obs as f64;
                rows.push(fit.coefficients);
                labels.push(cs.label.clone());
            }
            Err(e @ (Error::SingularDesign { .. } | Error::InsufficientData(_))) => {
                log::warn!("fama-macbeth: skipping period {}: {e}", cs.label);
                skipped.push(SkippedPeriod {
                    label: cs.label.clone(),
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }

    if skipped.len() * 5 > total || rows.is_empty() {
        let reason = skipped
            .first()
            .map(|s| s.reason.clone())
            .unwrap_or_else(|| "no usable periods".into());
        return Err(Error::TooManySkippedPeriods {
            skipped: skipped.len(),
            total,
            reason,
        });
    }

    let t = rows.len();
    let k = names.len();
    let per_period = DMatrix::from_fn(t, k, |i, j| rows[i][j]);
    let mut means = Vec::with_capacity(k);
    let mut tstats = Vec::with_capacity(k);
    let mut ses = Vec::with_capacity(k);
    for j in 0..k {
        let series: Vec<f64> = per_period.column(j).iter().copied().collect();
        let mean = series.iter().sum::<f64>() / t as f64;
        let scale = series.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let (se, tstat) = if t < 2 {
            (f64::NAN, TStat::ZeroVariance)
        } else {
            let var = nw_variance_of_mean(&series, lags.min(t - 1))?;
            let se = var.max(0.0).sqrt();
            (se, TStat::from_ratio(mean, se, scale))
        };
        means.push(mean);
        ses.push(se);
        tstats.push(tstat);
    }

    Ok(FMResult {
        names,
        mean_coefficients: means,
        nw_t_stats: tstats,
        nw_std_errors: ses,
        per_period_coefficients: per_period,
        period_labels: labels,
        n_periods: t,
        mean_r_squared: r2_sum / t as f64,
        mean_n_obs: n_sum / t as f64,
        skipped,
        lags,
    })
}
