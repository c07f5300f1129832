//! Deterministic CSV and JSON output.
//!
//! Floats are written as `{:.12e}` in CSV; JSON goes through
//! `serde_json::Value`, whose maps are ordered by key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// `{:.12e}`, with `inf`, `-inf` and `nan` spelled out.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.12e}")
    }
}

/// Compact label for a norm index: `1`, `2`, `inf`, `1.5`.
pub fn q_label(q: f64) -> String {
    if q.is_infinite() {
        "inf".into()
    } else {
        format!("{q}")
    }
}

/// Multi-index label `2_0_1`.
pub fn index_label(alpha: &heatlab::MultiIndex) -> String {
    alpha
        .entries()
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Config(format!("serializing output: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).expect("values always serialize");
    s.push('\n');
    Ok(s.into_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// One pass/fail verdict recorded by an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Where an experiment writes, and what it reports.
#[derive(Debug)]
pub struct RunContext {
    pub name: String,
    pub dir: PathBuf,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub summary: BTreeMap<String, serde_json::Value>,
    /// Reasons results were flagged untrusted.
    pub untrusted: Vec<String>,
}

impl RunContext {
    pub fn new(name: &str, dir: PathBuf, seed: u64) -> Self {
        RunContext {
            name: name.to_string(),
            dir,
            seed,
            checks: Vec::new(),
            summary: BTreeMap::new(),
            untrusted: Vec::new(),
        }
    }

    pub fn write_csv(&self, file: &str, table: &CsvTable) -> CliResult<()> {
        write_file(&self.dir.join(file), &table.to_bytes())
    }

    pub fn write_json<T: Serialize>(&self, file: &str, value: &T) -> CliResult<()> {
        write_file(&self.dir.join(file), &json_bytes(value)?)
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        let (name, detail) = (name.into(), detail.into());
        log::info!("[{}] {} {}: {}", self.name, if pass { "PASS" } else { "FAIL" }, name, detail);
        self.checks.push(Check { name, pass, detail });
    }

    pub fn note<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.summary.insert(key.to_string(), v);
    }

    pub fn flag(&mut self, trusted: bool, what: impl Into<String>) {
        if !trusted {
            self.untrusted.push(what.into());
        }
    }

    /// Fold a child context (run in a subdirectory) into this one.
    pub fn absorb(&mut self, child: RunContext) {
        for c in child.checks {
            self.checks.push(Check {
                name: format!("{}/{}", child.name, c.name),
                ..c
            });
        }
        for u in child.untrusted {
            self.untrusted.push(format!("{}/{}", child.name, u));
        }
        self.summary
            .insert(child.name.clone(), serde_json::to_value(child.summary).expect("maps serialize"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_rfc_style() {
        let mut t = CsvTable::new(&["a", "b", "c"]);
        t.push(vec![1.5.into(), "x,y".into(), f64::INFINITY.into()]);
        let s = String::from_utf8(t.to_bytes()).unwrap();
        assert_eq!(s, "a,b,c\n1.500000000000e0,\"x,y\",inf\n");
    }

    #[test]
    fn json_keys_are_sorted() {
        let mut m = std::collections::HashMap::new();
        m.insert("zeta", 1);
        m.insert("alpha", 2);
        m.insert("mid", 3);
        let s = String::from_utf8(json_bytes(&m).unwrap()).unwrap();
        let (a, z) = (s.find("alpha").unwrap(), s.find("zeta").unwrap());
        assert!(a < s.find("mid").unwrap() && s.find("mid").unwrap() < z);
    }

    #[test]
    fn labels() {
        assert_eq!(q_label(f64::INFINITY), "inf");
        assert_eq!(q_label(2.0), "2");
        assert_eq!(index_label(&heatlab::MultiIndex::new(vec![2, 0, 1])), "2_0_1");
    }
}
