//! Table and metadata writers. Output bytes depend only on the inputs.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use triage_core::{Error, Result};

/// Fixed six-decimal rendering used in every table.
pub fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Run metadata stored beside a table as `<stem>.meta.json`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta(Map<String, Value>);

impl Meta {
    pub fn new(command: &str) -> Self {
        let mut m = Map::new();
        m.insert("command".into(), command.into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        Self(m)
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(key.into(), value.into());
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.0).expect("json map serializes");
        s.push('\n');
        s
    }
}

/// Write `<stem>.csv` and `<stem>.meta.json` into `dir`, creating it.
pub fn write_table(dir: &Path, stem: &str, table: &Table, meta: &Meta) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.csv"));
    table.write(&path)?;
    std::fs::write(dir.join(format!("{stem}.meta.json")), meta.to_json())?;
    Ok(path)
}

pub fn read_file(path: &Path, what: &str) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Parameter(format!("cannot open {what} {}: {e}", path.display())))
}
