use std::io::Write;

use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const UNDEFINED: &str = "undefined";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    /// Phase of a vanishing amplitude.
    Undefined,
    /// Point failed; see the row's error.
    Missing,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }

    fn text(self) -> String {
        match self {
            Cell::Value(v) => format_number(v),
            Cell::Undefined => UNDEFINED.into(),
            Cell::Missing => String::new(),
        }
    }

    fn json(self) -> Value {
        match self {
            Cell::Value(v) if v.is_finite() => json!(v),
            Cell::Value(v) => json!(format_number(v)),
            Cell::Undefined => json!(UNDEFINED),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Undefined, Cell::Value)
    }
}

/// Shortest round-trip text, switching to exponent form for very small or
/// large magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub axes: Vec<f64>,
    pub values: Vec<Cell>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub axis_columns: Vec<String>,
    pub value_columns: Vec<String>,
    pub rows: Vec<ScanRow>,
}

fn bare(header: &str) -> &str {
    header.split('[').next().unwrap_or(header)
}

impl ScanTable {
    pub fn headers(&self) -> Vec<String> {
        let mut h = self.axis_columns.clone();
        h.extend(self.value_columns.iter().cloned());
        h.push("error".into());
        h
    }

    /// Values of the column named `name` (with or without its unit
    /// annotation). Axis columns never hold missing entries.
    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        if let Some(i) = self.axis_columns.iter().position(|c| c == name || bare(c) == name) {
            return Some(self.rows.iter().map(|r| Cell::Value(r.axes[i])).collect());
        }
        let i = self.value_columns.iter().position(|c| c == name || bare(c) == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    /// Column as plain numbers, NaN where undefined or missing.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)
            .map(|c| c.into_iter().map(|v| v.value().unwrap_or(f64::NAN)).collect())
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.headers()).map_err(io)?;
        for row in &self.rows {
            let mut record: Vec<String> = row.axes.iter().map(|v| format_number(*v)).collect();
            record.extend(row.values.iter().map(|c| c.text()));
            record.push(row.error.clone().unwrap_or_default());
            w.write_record(&record).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    /// Same schema as the CSV: a header list and one array per row.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut cells: Vec<Value> = row.axes.iter().map(|v| json!(v)).collect();
                cells.extend(row.values.iter().map(|c| c.json()));
                cells.push(row.error.as_ref().map_or(Value::Null, |e| json!(e)));
                Value::Array(cells)
            })
            .collect();
        json!({ "columns": self.headers(), "rows": rows })
    }
}
