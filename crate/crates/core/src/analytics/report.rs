//! Labeled result tables and figure series, with CSV and plain-text output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Quarter, TStat};

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub panel: String,
    pub row: String,
    pub column: String,
    pub value: Option<f64>,
    pub t_stat: Option<TStat>,
    /// Operation that produced the value.
    pub provenance: String,
}

/// A table of labeled cells. Panels, rows and columns render in first-use order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub name: String,
    pub title: String,
    pub cells: Vec<Cell>,
    pub notes: Vec<String>,
}

impl ReportTable {
    pub fn new(name: impl Into<String>, title: impl Into<String>) -> Self {
        ReportTable {
            name: name.into(),
            title: title.into(),
            cells: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        panel: &str,
        row: &str,
        column: &str,
        value: Option<f64>,
        t_stat: Option<TStat>,
        provenance: &str,
    ) {
        self.cells.push(Cell {
            panel: panel.to_string(),
            row: row.to_string(),
            column: column.to_string(),
            value,
            t_stat,
            provenance: provenance.to_string(),
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn get(&self, panel: &str, row: &str, column: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.panel == panel && c.row == row && c.column == column)
    }

    pub fn value(&self, panel: &str, row: &str, column: &str) -> Option<f64> {
        self.get(panel, row, column).and_then(|c| c.value)
    }

    /// Long-format CSV with full-precision values.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["table", "panel", "row", "column", "value", "t_stat", "provenance"])?;
        for c in &self.cells {
            w.write_record([
                self.name.as_str(),
                &c.panel,
                &c.row,
                &c.column,
                &c.value.map(|v| v.to_string()).unwrap_or_default(),
                &c.t_stat.map(|t| t.to_string()).unwrap_or_default(),
                &c.provenance,
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Aligned text with t-statistics in brackets under their estimates.
    pub fn render_text(&self) -> String {
        let mut out = format!("{} - {}\n", self.name, self.title);
        for panel in unique(self.cells.iter().map(|c| c.panel.as_str())) {
            let cells: Vec<&Cell> = self.cells.iter().filter(|c| c.panel == panel).collect();
            let rows = unique(cells.iter().map(|c| c.row.as_str()));
            let cols = unique(cells.iter().map(|c| c.column.as_str()));
            let mut lines: Vec<Vec<String>> = vec![std::iter::once(String::new())
                .chain(cols.iter().map(|c| c.to_string()))
                .collect()];
            for row in &rows {
                let find = |col: &str| cells.iter().find(|c| c.row == *row && c.column == col);
                lines.push(
                    std::iter::once(row.to_string())
                        .chain(cols.iter().map(|col| find(col).map_or(String::new(), |c| fmt_value(c.value))))
                        .collect(),
                );
                if cols.iter().any(|col| find(col).is_some_and(|c| c.t_stat.is_some())) {
                    lines.push(
                        std::iter::once(String::new())
                            .chain(cols.iter().map(|col| {
                                find(col)
                                    .and_then(|c| c.t_stat)
                                    .map_or(String::new(), |t| format!("[{}]", fmt_t(t)))
                            }))
                            .collect(),
                    );
                }
            }
            let n = lines[0].len();
            let widths: Vec<usize> = (0..n)
                .map(|j| lines.iter().map(|l| l[j].chars().count()).max().unwrap_or(0))
                .collect();
            if !panel.is_empty() {
                let _ = writeln!(out, "\n{panel}");
            }
            for l in lines {
                let mut s = format!("{:<w$}", l[0], w = widths[0]);
                for j in 1..n {
                    let _ = write!(s, "  {:>w$}", l[j], w = widths[j]);
                }
                let _ = writeln!(out, "{}", s.trim_end());
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "\nNote: {n}");
        }
        out
    }

    /// Writes `<dir>/<name>.csv` and `<dir>/<name>.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let csv_path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&csv_path, self.to_csv()?).map_err(|e| Error::io(&csv_path, e))?;
        let txt_path = dir.join(format!("{}.txt", self.name));
        std::fs::write(&txt_path, self.render_text()).map_err(|e| Error::io(&txt_path, e))
    }
}

fn unique<'a>(it: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen: Vec<&str> = Vec::new();
    for s in it {
        if !seen.contains(&s) {
            seen.push(s);
        }
    }
    seen
}

fn fmt_value(v: Option<f64>) -> String {
    match v {
        None => "-".into(),
        Some(x) if x != 0.0 && (x.abs() >= 1e6 || x.abs() < 1e-3) => format!("{x:.3e}"),
        Some(x) => format!("{x:.4}"),
    }
}

fn fmt_t(t: TStat) -> String {
    match t {
        TStat::Value(v) => format!("{v:.2}"),
        TStat::ZeroVariance => "exact".into(),
    }
}

/// Quarterly series for a figure, one or more named value columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureSeries {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<(Quarter, Vec<Option<f64>>)>,
}

impl FigureSeries {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = std::iter::once("quarter").chain(self.columns.iter().map(String::as_str)).collect();
        w.write_record(&header)?;
        for (q, vals) in &self.rows {
            let rec: Vec<String> = std::iter::once(q.to_string())
                .chain(vals.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()))
                .collect();
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, v)| v[j]).collect())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.to_csv()?).map_err(|e| Error::io(&path, e))
    }
}
