//! Report tables and figure series built from the estimated panels.

mod characteristics;
mod fm;
mod report;
mod sorts;
mod spread;
mod tables;

pub use characteristics::{Characteristics, Regressor, RegressorSource, StockQuarter};
pub use fm::{fm_beta_on_ownership, fm_cross_sections, fm_table, group_label, Dependent, FmBlock, FmModel};
pub use report::{Cell, FigureSeries, ReportTable};
pub use sorts::{
    bucket_sizes, high_ownership_membership, nested_sort_assign, size_terciles, sort_assign, SizeGroups, SortSpec,
    SortVariable,
};
pub use spread::{spread_points, spread_regression, spread_table, SpreadPoint, MIN_SPREAD_QUARTERS};
pub use tables::{
    annual_beta_table, beta_spread_series, beta_trend_table, hi_beta_series, hi_beta_sorts, index_comparison,
    large_small_series, market_volatility_series, summary_stats, turnover_by_ownership, AnalysisInputs,
};
