//! Index membership by quarter (e.g. the large-cap benchmark index).

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use super::bars::map_open_error;
use super::HeaderMap;
use crate::error::{Error, Result};
use crate::types::{Quarter, StockId};

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct IndexMembership {
    members: BTreeSet<(StockId, Quarter)>,
}

impl IndexMembership {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, stock: StockId, quarter: Quarter) {
        self.members.insert((stock, quarter));
    }

    pub fn contains(&self, stock: &StockId, quarter: Quarter) -> bool {
        self.members.contains(&(stock.clone(), quarter))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(StockId, Quarter)> {
        self.members.iter()
    }

    /// Reads a `stock_id,quarter` CSV (quarters written like `2008Q3`).
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| map_open_error(path, e))?;
        let header = HeaderMap::new(reader.headers()?);
        let c_stock = header.required("stock_id")?;
        let c_q = header.required("quarter")?;
        let mut out = IndexMembership::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let stock = rec.get(c_stock).unwrap_or("");
            let q: Quarter = rec
                .get(c_q)
                .unwrap_or("")
                .parse()
                .map_err(|e| Error::Config(format!("{} line {line}: {e}", path.display())))?;
            if stock.is_empty() {
                return Err(Error::Config(format!("{} line {line}: empty stock_id", path.display())));
            }
            out.insert(StockId::new(stock), q);
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "stock_id,quarter").map_err(io)?;
        for (s, q) in &self.members {
            writeln!(w, "{s},{q}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}
