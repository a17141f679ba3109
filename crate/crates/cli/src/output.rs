//! Result records and their CSV / JSON / manifest serialization.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Map, Value};

#[derive(Debug, Clone)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Num(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(v) => json!(v),
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{v:e}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }
}

/// A flat, ordered record. Non-finite numbers are dropped and the record is
/// marked `"unreliable": true` instead.
#[derive(Debug, Clone, Default)]
pub struct Record(Vec<(String, Cell)>);

impl Record {
    pub fn new() -> Self {
        Record::default()
    }

    fn set(&mut self, key: &str, cell: Cell) {
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = cell,
            None => self.0.push((key.to_string(), cell)),
        }
    }

    pub fn int(mut self, key: &str, v: impl TryInto<i64>) -> Self {
        let v = v.try_into().unwrap_or(i64::MAX);
        self.set(key, Cell::Int(v));
        self
    }

    pub fn num(mut self, key: &str, v: f64) -> Self {
        if v.is_finite() {
            self.set(key, Cell::Num(v));
        } else {
            self.set("unreliable", Cell::Bool(true));
        }
        self
    }

    pub fn flag(mut self, key: &str, v: bool) -> Self {
        if key == "unreliable" && self.get("unreliable").is_some() {
            // a dropped value already marked the record
            return self;
        }
        self.set(key, Cell::Bool(v));
        self
    }

    pub fn text(mut self, key: &str, v: impl Into<String>) -> Self {
        self.set(key, Cell::Text(v.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, c)| c)
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, c)| (k.clone(), c.to_json())).collect::<Map<_, _>>())
    }
}

pub fn write_csv(path: &Path, records: &[Record]) -> io::Result<()> {
    let mut cols: Vec<String> = Vec::new();
    for r in records {
        for (k, _) in &r.0 {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&cols)?;
    for r in records {
        let row: Vec<String> = cols.iter().map(|c| r.get(c).map(Cell::to_csv).unwrap_or_default()).collect();
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_json(path: &Path, summary: &Record, records: &[Record]) -> io::Result<()> {
    let v = json!({
        "summary": summary.to_json(),
        "records": records.iter().map(Record::to_json).collect::<Vec<_>>(),
    });
    fs::write(path, serde_json::to_string_pretty(&v)? + "\n")
}

pub fn write_manifest(path: &Path, manifest: &Value) -> io::Result<()> {
    fs::write(path, serde_json::to_string_pretty(manifest)? + "\n")
}
