//! Report assembly: JSON with `schema: 1`, CSV tables, merged summaries.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA: u32 = 1;

/// One checked invariant. `margin` is signed: positive means the check
/// held with that much room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    /// NaN (serialized as null) when nothing was measured.
    #[serde(deserialize_with = "nullable_f64")]
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Assertion {
    /// Holds when `value ≤ limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Assertion {
            name: name.into(),
            pass: value <= limit,
            margin: limit - value,
            detail: None,
        }
    }

    /// Holds when `value ≥ limit`.
    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Assertion {
            name: name.into(),
            pass: value >= limit,
            margin: value - limit,
            detail: None,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Assertion {
            name: name.into(),
            pass,
            margin: if pass { 1.0 } else { -1.0 },
            detail: None,
        }
    }

    /// A solver error recorded as a failed check.
    pub fn error(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Assertion {
            name: name.into(),
            pass: false,
            margin: f64::NAN,
            detail: Some(err.to_string()),
        }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

/// A CSV artifact: header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Shortest round-trip formatting: deterministic across runs.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub results: BTreeMap<String, Value>,
    pub assertions: Vec<Assertion>,
    pub tables: Vec<Table>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn result<T: Serialize>(&mut self, key: &str, v: &T) {
        self.results.insert(key.to_string(), serde_json::to_value(v).expect("serializable"));
    }

    pub fn check(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub config: Value,
    pub results: BTreeMap<String, Value>,
    pub assertions: Vec<Assertion>,
    pub all_pass: bool,
    pub timings_ms: BTreeMap<String, f64>,
}

/// Writes `<kind>.json` and every table as `<name>.csv` under `out`.
pub fn write(out: &Path, report: &RunReport, tables: &[Table]) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let json = serde_json::to_string_pretty(report)?;
    let path = out.join(format!("{}.json", report.kind));
    fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    for t in tables {
        let path = out.join(format!("{}.csv", t.name));
        fs::write(&path, t.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// Merges reports into one table: file, kind, assertion, pass, margin.
pub fn merge(paths: &[std::path::PathBuf]) -> Result<(Table, bool)> {
    let mut t = Table::new("summary", &["report", "kind", "assertion", "pass", "margin"]);
    let mut all = true;
    for p in paths {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let r: RunReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        if r.schema != SCHEMA {
            anyhow::bail!("{}: schema {} is not {}", p.display(), r.schema, SCHEMA);
        }
        for a in &r.assertions {
            all &= a.pass;
            t.push([p.display().to_string(), r.kind.clone(), a.name.clone(), a.pass.to_string(), num(a.margin)]);
        }
    }
    Ok((t, all))
}
