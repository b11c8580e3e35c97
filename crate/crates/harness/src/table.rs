//! Tabular series and their CSV form.

use std::io::Write;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // Shortest round-trip representation: stable across runs.
            Cell::F(x) => format!("{x:e}"),
            Cell::I(x) => x.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Columns given as `(name, unit)`; use `"1"` for dimensionless.
    pub fn new(name: &str, columns: &[(&'static str, &'static str)]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|&(name, unit)| Column { name, unit }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    /// `#`-prefixed metadata lines, a `name [unit]` header, then the rows.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[String]) -> Result<()> {
        for m in meta {
            writeln!(w, "# {m}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)))?;
        for r in &self.rows {
            out.write_record(r.iter().map(Cell::render))?;
        }
        out.flush()?;
        Ok(())
    }
}
