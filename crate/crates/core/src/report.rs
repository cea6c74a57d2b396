//! Verification records, suite reports and their JSON/CSV serialization.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

type C = Complex64;

pub const SCHEMA: u32 = 1;

/// `{"re": …, "im": …}`.
pub fn cx(z: C) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(format!("{x}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|computed − target| ≤ tolerance`.
    Abs,
    /// `|computed − target| ≤ tolerance·|target|`.
    Rel,
    /// `computed ≤ target`.
    AtMost,
    /// `computed ≥ target`.
    AtLeast,
    /// Boolean outcome.
    Flag,
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub id: String,
    pub anchor: String,
    pub computed: Value,
    pub target: Value,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    /// Diagnostics are reported but do not decide the suite outcome.
    pub gating: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Record {
    fn new(id: &str, anchor: &str, computed: Value, target: Value, tolerance: f64, comparison: Comparison, pass: bool) -> Self {
        Record {
            id: id.into(),
            anchor: anchor.into(),
            computed,
            target,
            tolerance,
            comparison,
            pass,
            gating: true,
            note: None,
        }
    }

    pub fn abs(id: &str, anchor: &str, computed: f64, target: f64, tol: f64) -> Self {
        let pass = (computed - target).abs() <= tol;
        Self::new(id, anchor, real(computed), real(target), tol, Comparison::Abs, pass)
    }

    pub fn abs_c(id: &str, anchor: &str, computed: C, target: C, tol: f64) -> Self {
        let pass = (computed - target).norm() <= tol;
        Self::new(id, anchor, cx(computed), cx(target), tol, Comparison::Abs, pass)
    }

    pub fn rel(id: &str, anchor: &str, computed: f64, target: f64, tol: f64) -> Self {
        let pass = (computed - target).abs() <= tol * target.abs();
        Self::new(id, anchor, real(computed), real(target), tol, Comparison::Rel, pass)
    }

    pub fn at_most(id: &str, anchor: &str, computed: f64, bound: f64) -> Self {
        Self::new(id, anchor, real(computed), real(bound), 0.0, Comparison::AtMost, computed <= bound)
    }

    pub fn at_least(id: &str, anchor: &str, computed: f64, bound: f64) -> Self {
        Self::new(id, anchor, real(computed), real(bound), 0.0, Comparison::AtLeast, computed >= bound)
    }

    pub fn flag(id: &str, anchor: &str, ok: bool) -> Self {
        Self::new(id, anchor, json!(ok), json!(true), 0.0, Comparison::Flag, ok)
    }

    /// A failed record standing in for a computation that returned an error.
    pub fn failed(id: &str, anchor: &str, err: &Error) -> Self {
        Self::new(id, anchor, json!(err.to_string()), Value::Null, 0.0, Comparison::Flag, false).with_note("computation failed")
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn diagnostic(mut self) -> Self {
        self.gating = false;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub pass: bool,
    pub records: Vec<Record>,
    /// Extra tables (sweeps, binorm tables) for plotting.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub data: Value,
    #[serde(skip)]
    pub seconds: f64,
}

impl SuiteReport {
    pub fn new(name: &str) -> Self {
        SuiteReport { name: name.into(), pass: true, records: Vec::new(), data: Value::Null, seconds: 0.0 }
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
        self.pass = self.records.iter().filter(|r| r.gating).all(|r| r.pass);
    }

    /// Push `make(v)` on success or a failed record on error.
    pub fn push_result<T>(&mut self, id: &str, anchor: &str, r: Result<T>, make: impl FnOnce(T) -> Vec<Record>) {
        match r {
            Ok(v) => {
                for rec in make(v) {
                    self.push(rec);
                }
            }
            Err(e) => self.push(Record::failed(id, anchor, &e)),
        }
    }

    pub fn record(&self, id: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| r.gating && !r.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
    pub runtime: Value,
}

impl VerificationReport {
    pub fn new(command: &str, config: Value, suites: Vec<SuiteReport>, total_seconds: f64) -> Self {
        let per: serde_json::Map<String, Value> = suites.iter().map(|s| (s.name.clone(), json!(s.seconds))).collect();
        VerificationReport {
            schema: SCHEMA,
            tool: "nhlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            pass: suites.iter().all(|s| s.pass),
            suites,
            runtime: json!({ "total_s": total_seconds, "suites_s": per }),
        }
    }

    pub fn record_count(&self) -> usize {
        self.suites.iter().map(|s| s.records.len()).sum()
    }

    pub fn failure_count(&self) -> usize {
        self.suites.iter().map(|s| s.failures().count()).sum()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} {}: {} suites, {} records, {} failing, {:.1}s",
            self.command,
            if self.pass { "PASS" } else { "FAIL" },
            self.suites.len(),
            self.record_count(),
            self.failure_count(),
            self.runtime["total_s"].as_f64().unwrap_or(0.0)
        )
    }

    /// Every record as one CSV row.
    pub fn records_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["suite", "id", "anchor", "computed", "target", "tolerance", "comparison", "pass", "gating"])
            .map_err(csv_err)?;
        for s in &self.suites {
            for r in &s.records {
                let cmp = serde_json::to_value(r.comparison).map_err(json_err)?;
                w.write_record([
                    s.name.as_str(),
                    &r.id,
                    &r.anchor,
                    &value_cell(&r.computed),
                    &value_cell(&r.target),
                    &format!("{:e}", r.tolerance),
                    cmp.as_str().unwrap_or_default(),
                    &r.pass.to_string(),
                    &r.gating.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.into_inner().map_err(|e| Error::Parameter(format!("csv: {e}")))
    }
}

fn value_cell(v: &Value) -> String {
    match v {
        Value::Object(m) if m.contains_key("re") => {
            format!("{}{:+}i", m["re"].as_f64().unwrap_or(f64::NAN), m["im"].as_f64().unwrap_or(f64::NAN))
        }
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parameter(format!("csv: {e}"))
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Parameter(format!("json: {e}"))
}

/// A numeric table written as CSV with `.` decimals.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Parameter(format!("csv: {e}")))
    }
}

pub fn to_json(report: &VerificationReport) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(report).map_err(json_err)?;
    v.push(b'\n');
    Ok(v)
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_and_pass_logic() {
        let mut s = SuiteReport::new("demo");
        s.push(Record::abs("a", "anchor", 1.0, 1.0 + 1e-9, 1e-8));
        assert!(s.pass);
        s.push(Record::rel("b", "anchor", 2.0, 1.0, 0.1).diagnostic());
        assert!(s.pass);
        s.push(Record::at_most("c", "anchor", 2.0, 1.0));
        assert!(!s.pass);
        assert_eq!(s.failures().count(), 1);
    }

    #[test]
    fn complex_serialization() {
        let v = cx(C::new(1.5, -2.0));
        assert_eq!(v.to_string(), r#"{"im":-2.0,"re":1.5}"#);
        assert_eq!(value_cell(&v), "1.5-2i");
        assert_eq!(real(f64::INFINITY), json!("inf"));
    }

    #[test]
    fn report_json_and_csv() {
        let mut s = SuiteReport::new("demo");
        s.push(Record::flag("f", "anchor", true));
        let r = VerificationReport::new("verify", json!({}), vec![s], 0.5);
        let j: Value = serde_json::from_slice(&to_json(&r).unwrap()).unwrap();
        assert_eq!(j["schema"], 1);
        assert_eq!(j["suites"][0]["records"][0]["anchor"], "anchor");
        let csv = String::from_utf8(r.records_csv().unwrap()).unwrap();
        assert!(csv.starts_with("suite,id,anchor"));
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![0.5, 1e-3]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "x,y\n5e-1,1e-3\n");
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_atomic(&p, b"{}").unwrap();
        write_atomic(&p, b"[1]").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"[1]");
    }
}
