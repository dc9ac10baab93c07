//! Tabular output: CSV with a header row, or JSON `{spec, rows}`.
//!
//! Floats go to CSV with 17 significant digits so they round-trip exactly;
//! JSON uses the shortest round-tripping representation. Missing values are
//! empty CSV cells and JSON `null`.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::run_spec::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Empty, Cell::Float)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

/// 17 significant digits in scientific notation, e.g. `2.4872800000000001e0`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Float values of one column (`None` for non-float cells).
    pub fn floats(&self, name: &str) -> Vec<Option<f64>> {
        let i = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows
            .iter()
            .map(|r| match r[i] {
                Cell::Float(x) => Some(x),
                _ => None,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush().map_err(|e| CliError::Io { path: "output".into(), source: e })?;
        Ok(())
    }

    pub fn json_rows(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let m: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::json))
                    .collect();
                Value::Object(m)
            })
            .collect();
        Value::Array(rows)
    }
}

/// The full output document for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub spec: Value,
    pub table: Table,
    /// Extra top-level JSON object (the validation summary).
    pub summary: Option<Value>,
}

impl Report {
    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        match format {
            Format::Csv => self.table.write_csv(&mut buf)?,
            Format::Json => {
                let mut doc = Map::new();
                doc.insert("spec".into(), self.spec.clone());
                doc.insert("rows".into(), self.table.json_rows());
                if let Some(s) = &self.summary {
                    doc.insert("summary".into(), s.clone());
                }
                serde_json::to_writer_pretty(&mut buf, &Value::Object(doc))
                    .map_err(|e| CliError::Io { path: "output".into(), source: e.into() })?;
                buf.push(b'\n');
            }
        }
        Ok(buf)
    }
}
