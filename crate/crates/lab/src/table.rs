//! Versioned CSV tables. The first line is `#schema=<name>/<version>`, floats
//! carry 17 significant digits.

use std::path::{Path, PathBuf};

use crate::report::write_bytes;
use crate::LabError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub schema: &'static str,
    pub version: u32,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(schema: &'static str, version: u32, columns: &[&'static str]) -> Self {
        Table {
            schema,
            version,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.schema);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, LabError> {
        let mut buf = format!("#schema={}/{}\n", self.schema, self.version).into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
            let err = |e: csv::Error| LabError::Io {
                path: PathBuf::from(self.schema),
                detail: e.to_string(),
            };
            w.write_record(&self.columns).map_err(err)?;
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::render)).map_err(err)?;
            }
            w.flush().map_err(|e| LabError::Io {
                path: PathBuf::from(self.schema),
                detail: e.to_string(),
            })?;
        }
        Ok(buf)
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        write_bytes(path, &self.to_csv()?)
    }
}
