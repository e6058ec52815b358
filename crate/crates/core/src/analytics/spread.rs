//! Time-series regression of the large-minus-small liquidity-beta spread.

use std::collections::BTreeMap;

use super::characteristics::{Regressor, RegressorSource};
use super::report::ReportTable;
use super::sorts::SizeGroups;
use crate::commonality::BetaEstimate;
use crate::econ::describe::mean;
use crate::econ::{ols_fit_hac, Design, RegressionResult};
use crate::error::{Error, Result};
use crate::types::{OwnershipCategory, Quarter, SizeGroup};

/// Fewest quarters accepted by [`spread_regression`].
pub const MIN_SPREAD_QUARTERS: usize = 8;

/// One quarter of large-minus-small differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadPoint {
    pub quarter: Quarter,
    /// Mean beta_L of large firms minus that of small firms.
    pub spread: f64,
    pub inst_diff: Option<f64>,
    pub fown_diff: Option<f64>,
    pub lown_diff: Option<f64>,
    pub size_diff: Option<f64>,
    pub illiq_diff: Option<f64>,
}

impl SpreadPoint {
    pub fn own_diff(&self, category: OwnershipCategory) -> Option<f64> {
        match category {
            OwnershipCategory::Institution => self.inst_diff,
            OwnershipCategory::ForeignInstitution => self.fown_diff,
            OwnershipCategory::LocalInstitution => self.lown_diff,
        }
    }
}

#[derive(Default)]
struct GroupAcc {
    beta: Vec<f64>,
    regs: BTreeMap<&'static str, Vec<f64>>,
}

/// Quarters in which both the large and the small tercile have estimates.
pub fn spread_points(
    estimates: &[BetaEstimate],
    source: &RegressorSource<'_>,
    size_groups: &SizeGroups,
) -> Vec<SpreadPoint> {
    let regs = [
        Regressor::Ownership(OwnershipCategory::Institution),
        Regressor::Ownership(OwnershipCategory::ForeignInstitution),
        Regressor::Ownership(OwnershipCategory::LocalInstitution),
        Regressor::Size,
        Regressor::Illiq,
    ];
    let mut acc: BTreeMap<(Quarter, SizeGroup), GroupAcc> = BTreeMap::new();
    for e in estimates {
        let Some(&g) = size_groups.get(&(e.stock_id.clone(), e.quarter)) else { continue };
        if g == SizeGroup::Mid {
            continue;
        }
        let a = acc.entry((e.quarter, g)).or_default();
        a.beta.push(e.beta_l);
        for r in regs {
            if let Some(v) = source.value(r, &e.stock_id, e.quarter) {
                a.regs.entry(r.name()).or_default().push(v);
            }
        }
    }
    let quarters: Vec<Quarter> = acc.keys().map(|(q, _)| *q).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let mut out = Vec::new();
    for q in quarters {
        let (Some(l), Some(s)) = (acc.get(&(q, SizeGroup::Large)), acc.get(&(q, SizeGroup::Small))) else {
            continue;
        };
        let diff = |r: Regressor| -> Option<f64> {
            let a = mean(l.regs.get(r.name())?)?;
            let b = mean(s.regs.get(r.name())?)?;
            Some(a - b)
        };
        out.push(SpreadPoint {
            quarter: q,
            spread: mean(&l.beta).expect("non-empty") - mean(&s.beta).expect("non-empty"),
            inst_diff: diff(regs[0]),
            fown_diff: diff(regs[1]),
            lown_diff: diff(regs[2]),
            size_diff: diff(regs[3]),
            illiq_diff: diff(regs[4]),
        });
    }
    out
}

/// OLS of the spread on a constant, a quarter-index trend, the given ownership
/// differences and (optionally) size and illiquidity differences, with
/// Newey-West t-statistics. Quarters missing any regressor are left out; the
/// trend counts quarters from the first point.
pub fn spread_regression(
    points: &[SpreadPoint],
    ownership: &[OwnershipCategory],
    with_controls: bool,
    nw_lags: usize,
) -> Result<RegressionResult> {
    let Some(first) = points.first() else {
        return Err(Error::InsufficientData("no spread observations".into()));
    };
    let mut y = Vec::new();
    let mut trend = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); ownership.len() + if with_controls { 2 } else { 0 }];
    for p in points {
        let mut row: Vec<Option<f64>> = ownership.iter().map(|c| p.own_diff(*c)).collect();
        if with_controls {
            row.push(p.size_diff);
            row.push(p.illiq_diff);
        }
        let Some(row) = row.into_iter().collect::<Option<Vec<f64>>>() else { continue };
        y.push(p.spread);
        trend.push((p.quarter.ordinal() - first.quarter.ordinal() + 1) as f64);
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    if y.len() < MIN_SPREAD_QUARTERS {
        return Err(Error::InsufficientData(format!(
            "spread regression needs at least {MIN_SPREAD_QUARTERS} quarters, got {}",
            y.len()
        )));
    }
    let mut d = Design::with_intercept(y.len());
    d.push("trend", trend);
    let mut names: Vec<String> = ownership.iter().map(|c| format!("{}_diff", c.as_str())).collect();
    if with_controls {
        names.push("size_diff".into());
        names.push("illiq_diff".into());
    }
    for (n, c) in names.into_iter().zip(cols) {
        d.push(n, c);
    }
    ols_fit_hac(&y, &d, nw_lags)
}

fn row_label(name: &str) -> &str {
    match name {
        "intercept" => "Intercept",
        "trend" => "Trend",
        "institution_diff" => "Inst diff",
        "foreign_institution_diff" => "Fown diff",
        "local_institution_diff" => "Lown diff",
        "size_diff" => "Size diff",
        "illiq_diff" => "Illiq diff",
        other => other,
    }
}

pub fn spread_table(points: &[SpreadPoint], nw_lags: usize) -> ReportTable {
    use OwnershipCategory::*;
    let models: [(&str, &[OwnershipCategory], bool); 7] = [
        ("M1", &[Institution], false),
        ("M2", &[Institution], true),
        ("M3", &[ForeignInstitution], false),
        ("M4", &[ForeignInstitution], true),
        ("M5", &[LocalInstitution], false),
        ("M6", &[LocalInstitution], true),
        ("M7", &[ForeignInstitution, LocalInstitution], true),
    ];
    let mut t = ReportTable::new("table6", "Large-minus-small liquidity beta spread on ownership differences");
    let prov = "spread_regression";
    for (label, own, controls) in models {
        match spread_regression(points, own, controls, nw_lags) {
            Ok(fit) => {
                for (j, n) in fit.names.iter().enumerate() {
                    t.push("", row_label(n), label, Some(fit.coefficients[j]), Some(fit.t_stats[j]), prov);
                }
                t.push("", "R2", label, Some(fit.r_squared), None, prov);
                t.push("", "Quarters", label, Some(fit.n_obs as f64), None, prov);
            }
            Err(e) => {
                t.push("", "Intercept", label, None, None, prov);
                t.note(format!("{label}: skipped ({e})"));
            }
        }
    }
    t
}
