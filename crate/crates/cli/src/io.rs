//! CSV and JSON emission of result tables, and the matching readers.
//!
//! CSV files carry a header row `name (unit)`; column kinds and metadata go to
//! a sidecar `<file>.meta.json`. JSON files hold columns, rows and metadata together.

use crate::config::{Format, SCHEMA_VERSION};
use crate::CliError;
use adaprep::table::{Cell, Column, ColumnKind, ResultTable};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Metadata key holding the wall-clock runtime; the only non-reproducible field.
pub const RUNTIME_KEY: &str = "runtime_seconds";

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn real_to_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("NaN")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn real_from_str(s: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| CliError::Format(format!("'{s}' is not a number")))
}

fn meta_json(table: &ResultTable) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "columns": table.columns,
        "metadata": table.metadata,
    })
}

pub fn emit(table: &ResultTable, path: &Path, format: Format) -> Result<(), CliError> {
    if !table.is_rectangular() {
        return Err(CliError::Format("table is not rectangular".into()));
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(table.columns.iter().map(|c| c.header()))?;
            for row in &table.rows {
                w.write_record(row.iter().map(|c| match c {
                    Cell::Real(x) => x.to_string(),
                    Cell::Text(s) => s.clone(),
                }))?;
            }
            w.flush()?;
            std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta_json(table))? + "\n")?;
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    Value::Array(
                        r.iter()
                            .map(|c| match c {
                                Cell::Real(x) => real_to_json(*x),
                                Cell::Text(s) => json!(s),
                            })
                            .collect(),
                    )
                })
                .collect();
            let mut doc = meta_json(table);
            doc["rows"] = Value::Array(rows);
            std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
        }
    }
    Ok(())
}

fn split_header(h: &str) -> (String, String) {
    if let (Some(open), true) = (h.rfind(" ("), h.ends_with(')')) {
        (h[..open].to_string(), h[open + 2..h.len() - 1].to_string())
    } else {
        (h.to_string(), String::new())
    }
}

fn parse_meta(v: &Value) -> Result<(Vec<Column>, BTreeMap<String, String>), CliError> {
    let cols: Vec<Column> = serde_json::from_value(v["columns"].clone())?;
    let meta: BTreeMap<String, String> = serde_json::from_value(v["metadata"].clone())?;
    Ok((cols, meta))
}

/// Reads a table written by [`emit`].
pub fn read(path: &Path, format: Format) -> Result<ResultTable, CliError> {
    match format {
        Format::Csv => {
            let side: Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
            let (cols, meta) = parse_meta(&side)?;
            let mut r = csv::Reader::from_path(path)?;
            let headers = r.headers()?.clone();
            if headers.len() != cols.len() {
                return Err(CliError::Format("CSV header does not match the sidecar columns".into()));
            }
            for (h, c) in headers.iter().zip(&cols) {
                let (name, unit) = split_header(h);
                if name != c.name || unit != c.unit {
                    return Err(CliError::Format(format!("CSV header '{h}' does not match column '{}'", c.header())));
                }
            }
            let mut table = ResultTable::new(cols);
            table.metadata = meta;
            for rec in r.records() {
                let rec = rec?;
                let row = rec
                    .iter()
                    .zip(&table.columns)
                    .map(|(s, c)| match c.kind {
                        ColumnKind::Real => real_from_str(s).map(Cell::Real),
                        ColumnKind::Text => Ok(Cell::Text(s.to_string())),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                table.push_row(row).map_err(|e| CliError::Format(e.to_string()))?;
            }
            Ok(table)
        }
        Format::Json => {
            let doc: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            let (cols, meta) = parse_meta(&doc)?;
            let mut table = ResultTable::new(cols);
            table.metadata = meta;
            let rows = doc["rows"].as_array().ok_or_else(|| CliError::Format("missing rows".into()))?;
            for r in rows {
                let cells = r.as_array().ok_or_else(|| CliError::Format("row is not an array".into()))?;
                let row = cells
                    .iter()
                    .zip(&table.columns)
                    .map(|(v, c)| match (c.kind, v) {
                        (ColumnKind::Real, Value::Number(x)) => Ok(Cell::Real(x.as_f64().unwrap())),
                        (ColumnKind::Real, Value::String(s)) => real_from_str(s).map(Cell::Real),
                        (ColumnKind::Text, Value::String(s)) => Ok(Cell::Text(s.clone())),
                        _ => Err(CliError::Format(format!("bad cell {v} in column '{}'", c.name))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if row.len() != table.columns.len() {
                    return Err(CliError::Format("ragged row".into()));
                }
                table.push_row(row).map_err(|e| CliError::Format(e.to_string()))?;
            }
            Ok(table)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new(vec![Column::text("model"), Column::real("gap", "Γ"), Column::real("x", "")]);
        t.push_row(vec!["spin".into(), 0.1.into(), f64::NAN.into()]).unwrap();
        t.push_row(vec!["fer,mion".into(), 1e-300.into(), f64::INFINITY.into()]).unwrap();
        t.set_meta("seed", 4);
        t
    }

    fn same(a: &ResultTable, b: &ResultTable) -> bool {
        a.columns == b.columns
            && a.metadata == b.metadata
            && a.rows.len() == b.rows.len()
            && a.rows.iter().zip(&b.rows).all(|(x, y)| {
                x.iter().zip(y).all(|(p, q)| match (p, q) {
                    (Cell::Real(u), Cell::Real(v)) => u.to_bits() == v.to_bits() || (u.is_nan() && v.is_nan()),
                    _ => p == q,
                })
            })
    }

    #[test]
    fn round_trip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        for (f, name) in [(Format::Csv, "t.csv"), (Format::Json, "t.json")] {
            let p = dir.path().join(name);
            emit(&sample(), &p, f).unwrap();
            assert!(same(&read(&p, f).unwrap(), &sample()));
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        let t = ResultTable::new(vec![Column::real("t", "1/Γ"), Column::real("S", "nats")]);
        emit(&t, &p, Format::Csv).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "t (1/Γ),S (nats)\n");
        assert!(same(&read(&p, Format::Csv).unwrap(), &t));
    }

    #[test]
    fn header_split() {
        assert_eq!(split_header("gap (Γ)"), ("gap".into(), "Γ".into()));
        assert_eq!(split_header("cycle"), ("cycle".into(), String::new()));
    }
}
