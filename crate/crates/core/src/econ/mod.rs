//! Statistical estimators: OLS, Newey-West covariance, Fama-MacBeth,
//! Dickey-Fuller and deterministic-trend regressions.

pub mod describe;
mod fama_macbeth;
mod hac;
mod ols;
mod unit_root;

pub use fama_macbeth::{fama_macbeth, CrossSection, FMResult, SkippedPeriod};
pub use hac::{bartlett_weight, nw_hac_cov, nw_variance_of_mean};
pub use ols::{ols_fit, ols_fit_hac, Design, RegressionResult};
pub use unit_root::{
    df_critical_values, dickey_fuller, trend_regression, DfOutcome, DfStatistic, MIN_DF_LENGTH,
};
