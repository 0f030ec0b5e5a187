//! Column-typed result table shared by the simulators and the CLI.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Real,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// empty for dimensionless quantities
    pub unit: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn real(name: &str, unit: &str) -> Self {
        Self { name: name.into(), unit: unit.into(), kind: ColumnKind::Real }
    }
    pub fn text(name: &str) -> Self {
        Self { name: name.into(), unit: String::new(), kind: ColumnKind::Text }
    }
    /// Header cell, e.g. `t (1/Γ)`.
    pub fn header(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{} ({})", self.name, self.unit)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Real(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Real(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// Rectangular table; metadata is free-form key/value text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn new(columns: Vec<Column>) -> Self {
        Self { columns, rows: Vec::new(), metadata: BTreeMap::new() }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch(format!("row has {} cells, table has {} columns", row.len(), self.columns.len())));
        }
        for (c, col) in row.iter().zip(&self.columns) {
            let ok = matches!((c, col.kind), (Cell::Real(_), ColumnKind::Real) | (Cell::Text(_), ColumnKind::Text));
            if !ok {
                return Err(Error::InvalidParameter(format!("cell type does not match column '{}'", col.name)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_reals(&mut self, row: &[f64]) -> Result<()> {
        self.push_row(row.iter().map(|&x| Cell::Real(x)).collect())
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Real values of a column.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.column_index(name).ok_or_else(|| Error::UnknownLabel(name.into()))?;
        if self.columns[k].kind != ColumnKind::Real {
            return Err(Error::InvalidParameter(format!("column '{name}' is not numeric")));
        }
        Ok(self.rows.iter().map(|r| r[k].as_f64().unwrap()).collect())
    }

    /// Appends all rows of `other`; the column layouts must agree.
    pub fn extend(&mut self, other: ResultTable) -> Result<()> {
        if other.columns != self.columns {
            return Err(Error::DimensionMismatch("column layouts differ".into()));
        }
        self.rows.extend(other.rows);
        Ok(())
    }

    pub fn is_rectangular(&self) -> bool {
        self.rows.iter().all(|r| r.len() == self.columns.len())
    }
}
