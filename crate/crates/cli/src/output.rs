use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use ncf_core::NcfError;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::Format;

pub const SCHEMA_VERSION: u32 = 1;

pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

fn fmt_cell(c: &Cell) -> String {
    match c {
        Cell::Int(v) => v.to_string(),
        // 17 significant digits round-trip every binary64 value.
        Cell::Float(v) => format!("{v:.16e}"),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
    }
}

pub struct Csv {
    header: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Csv {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(fmt_cell).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }
}

pub struct Report {
    json: Value,
    csv: Csv,
    /// Verbatim output that replaces both formats (DOT text).
    text: Option<String>,
    /// Set when output is written but the run still fails.
    pub failure: Option<NcfError>,
}

impl Report {
    pub fn new<T: Serialize>(command: &str, payload: &T, csv: Csv) -> Result<Self, NcfError> {
        let mut map = Map::new();
        map.insert("schema_version".into(), SCHEMA_VERSION.into());
        map.insert("command".into(), command.into());
        match serde_json::to_value(payload).map_err(|e| NcfError::Domain(e.to_string()))? {
            Value::Object(fields) => map.extend(fields),
            other => {
                map.insert("result".into(), other);
            }
        }
        Ok(Self {
            json: Value::Object(map),
            csv,
            text: None,
            failure: None,
        })
    }

    pub fn with_text(mut self, text: String) -> Self {
        self.text = Some(text);
        self
    }

    pub fn with_failure(mut self, failure: Option<NcfError>) -> Self {
        self.failure = failure;
        self
    }

    pub fn render(&self, format: Format) -> String {
        if let Some(t) = &self.text {
            return t.clone();
        }
        match format {
            Format::Json => {
                let mut s =
                    serde_json::to_string_pretty(&self.json).expect("JSON values serialize");
                s.push('\n');
                s
            }
            Format::Csv => self.csv.render(),
        }
    }

    pub fn write(&self, format: Format, out: Option<&Path>) -> io::Result<()> {
        let body = self.render(format);
        match out {
            Some(p) => std::fs::write(p, body),
            None => {
                let mut stdout = io::stdout().lock();
                stdout.write_all(body.as_bytes())?;
                stdout.flush()
            }
        }
    }
}
