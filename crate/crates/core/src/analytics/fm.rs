//! Fama-MacBeth regressions of firm-quarter estimates on lagged ownership and controls.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::characteristics::{Regressor, RegressorSource};
use super::report::ReportTable;
use super::sorts::SizeGroups;
use crate::commonality::BetaEstimate;
use crate::econ::{fama_macbeth, CrossSection, Design, FMResult};
use crate::error::{Error, Result};
use crate::types::{Quarter, SizeGroup};

/// Firm-quarter quantity used as the cross-sectional dependent variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependent {
    BetaL,
    BetaHi,
    Autocorr,
}

impl Dependent {
    pub fn value(self, e: &BetaEstimate) -> Option<f64> {
        match self {
            Dependent::BetaL => Some(e.beta_l),
            Dependent::BetaHi => e.beta_hi,
            Dependent::Autocorr => e.autocorr,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Dependent::BetaL => "beta_L",
            Dependent::BetaHi => "beta_HI",
            Dependent::Autocorr => "autocorr",
        }
    }
}

/// One quarterly cross-section per quarter with at least one complete row.
/// `group` restricts to firm-quarters in that size tercile.
pub fn fm_cross_sections(
    estimates: &[BetaEstimate],
    source: &RegressorSource<'_>,
    size_groups: &SizeGroups,
    dependent: Dependent,
    regressors: &[Regressor],
    group: Option<SizeGroup>,
) -> Vec<CrossSection> {
    let mut by_q: BTreeMap<Quarter, (Vec<f64>, Vec<Vec<f64>>)> = BTreeMap::new();
    for e in estimates {
        if let Some(g) = group {
            if size_groups.get(&(e.stock_id.clone(), e.quarter)) != Some(&g) {
                continue;
            }
        }
        let Some(y) = dependent.value(e) else { continue };
        let xs: Option<Vec<f64>> = regressors
            .iter()
            .map(|r| source.value(*r, &e.stock_id, e.quarter))
            .collect();
        let Some(xs) = xs else { continue };
        let entry = by_q.entry(e.quarter).or_insert_with(|| (Vec::new(), vec![Vec::new(); regressors.len()]));
        entry.0.push(y);
        for (col, x) in entry.1.iter_mut().zip(xs) {
            col.push(x);
        }
    }
    by_q.into_iter()
        .map(|(q, (y, cols))| {
            let mut design = Design::with_intercept(y.len());
            for (r, c) in regressors.iter().zip(cols) {
                design.push(r.name(), c);
            }
            CrossSection {
                label: q.to_string(),
                y,
                design,
            }
        })
        .collect()
}

pub fn fm_beta_on_ownership(
    estimates: &[BetaEstimate],
    source: &RegressorSource<'_>,
    size_groups: &SizeGroups,
    dependent: Dependent,
    regressors: &[Regressor],
    group: Option<SizeGroup>,
    nw_lags: usize,
) -> Result<FMResult> {
    let cs = fm_cross_sections(estimates, source, size_groups, dependent, regressors, group);
    if cs.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no complete cross-sections for {} on {:?}",
            dependent.label(),
            regressors.iter().map(|r| r.name()).collect::<Vec<_>>()
        )));
    }
    fama_macbeth(&cs, nw_lags)
}

#[derive(Debug, Clone)]
pub struct FmModel {
    pub label: String,
    pub regressors: Vec<Regressor>,
}

impl FmModel {
    pub fn new(label: impl Into<String>, regressors: &[Regressor]) -> Self {
        FmModel {
            label: label.into(),
            regressors: regressors.to_vec(),
        }
    }
}

/// A block of models sharing one estimate panel and dependent variable.
#[derive(Debug, Clone)]
pub struct FmBlock<'a> {
    /// Prefix for panel names; empty for a single block.
    pub label: String,
    pub estimates: &'a [BetaEstimate],
    pub size_groups: &'a SizeGroups,
    pub dependent: Dependent,
    pub models: Vec<FmModel>,
    /// `None` is all stocks.
    pub groups: Vec<Option<SizeGroup>>,
}

pub fn group_label(g: Option<SizeGroup>) -> &'static str {
    g.map_or("All", SizeGroup::label)
}

/// One panel per model; rows are coefficients, columns are size groups.
/// Models that cannot be estimated leave their cells empty and add a note.
pub fn fm_table(
    name: &str,
    title: &str,
    blocks: &[FmBlock<'_>],
    source: &RegressorSource<'_>,
    nw_lags: usize,
) -> ReportTable {
    let mut t = ReportTable::new(name, title);
    let prov = "fm_beta_on_ownership";
    for b in blocks {
        for m in &b.models {
            let panel = if b.label.is_empty() {
                m.label.clone()
            } else {
                format!("{}: {}", b.label, m.label)
            };
            for &g in &b.groups {
                let col = group_label(g);
                match fm_beta_on_ownership(b.estimates, source, b.size_groups, b.dependent, &m.regressors, g, nw_lags) {
                    Ok(fm) => {
                        for (j, n) in fm.names.iter().enumerate() {
                            let row = regressor_label(n, &m.regressors);
                            t.push(&panel, &row, col, Some(fm.mean_coefficients[j]), Some(fm.nw_t_stats[j]), prov);
                        }
                        t.push(&panel, "Avg R2", col, Some(fm.mean_r_squared), None, prov);
                        t.push(&panel, "Quarters", col, Some(fm.n_periods as f64), None, prov);
                    }
                    Err(e) => {
                        log::warn!("{name} {panel} {col}: {e}");
                        t.push(&panel, "Intercept", col, None, None, prov);
                        t.note(format!("{panel}, {col}: skipped ({e})"));
                    }
                }
            }
        }
    }
    t
}

fn regressor_label(name: &str, regs: &[Regressor]) -> String {
    if name == "intercept" {
        return "Intercept".into();
    }
    regs.iter()
        .find(|r| r.name() == name)
        .map_or_else(|| name.to_string(), |r| r.label().to_string())
}
