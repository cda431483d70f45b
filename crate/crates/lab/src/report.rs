//! Experiment reports, CSV tables and the aggregate summary.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{LabError, Result};

/// One estimate. Exact (deterministic) values carry `stderr = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub key: String,
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl Stat {
    pub fn new(key: impl Into<String>, value: f64, stderr: f64, n: u64) -> Self {
        Stat { key: key.into(), value, stderr, n }
    }

    pub fn exact(key: impl Into<String>, value: f64) -> Self {
        Stat::new(key, value, 0.0, 1)
    }
}

/// A pass/fail comparison of one statistic with its threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub key: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn at_most(key: impl Into<String>, value: f64, max: f64) -> Self {
        Check { key: key.into(), value, min: None, max: Some(max), pass: value <= max }
    }

    pub fn at_least(key: impl Into<String>, value: f64, min: f64) -> Self {
        Check { key: key.into(), value, min: Some(min), max: None, pass: value >= min }
    }

    pub fn within(key: impl Into<String>, value: f64, min: f64, max: f64) -> Self {
        Check { key: key.into(), value, min: Some(min), max: Some(max), pass: min <= value && value <= max }
    }

    /// Boolean condition recorded as 1/0.
    pub fn holds(key: impl Into<String>, ok: bool) -> Self {
        Check { key: key.into(), value: ok as u8 as f64, min: Some(1.0), max: None, pass: ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub stats: Vec<Stat>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(name: &str, cfg: &RunConfig) -> Self {
        ExperimentReport {
            name: name.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            params: cfg.params(),
            stats: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    pub fn stat(&mut self, s: Stat) -> &mut Self {
        self.stats.push(s);
        self
    }

    pub fn check(&mut self, c: Check) -> &mut Self {
        self.checks.push(c);
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&Stat> {
        self.stats.iter().find(|s| s.key == key)
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Recompute `pass` from the checks and reject malformed reports.
    pub fn finish(mut self) -> Result<Self> {
        if self.stats.is_empty() {
            return Err(LabError::Report(format!("`{}` has no statistics", self.name)));
        }
        for s in &self.stats {
            if s.n == 0 {
                return Err(LabError::Report(format!("`{}`: statistic `{}` has no samples", self.name, s.key)));
            }
        }
        self.pass = self.checks.iter().all(|c| c.pass);
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A plot-ready table. Numbers are written with the shortest round-trip
/// representation, so equal values give equal bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
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

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
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

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table `{}`", self.name);
        self.rows.push(row);
    }

    /// CSV with a provenance comment line, then the header.
    pub fn to_csv(&self, config_hash: &str, seed: u64) -> String {
        let mut out = format!("# rcmlab {} config_hash={config_hash} seed={seed}\n", self.name);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match c {
                    Cell::Num(v) => write!(out, "{v:?}").unwrap(),
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Text(t) => out.push_str(t),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Outcome of one experiment run: the summary, its tables and any further
/// files (binary grids, environment dumps) by file name.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: ExperimentReport,
    pub tables: Vec<Table>,
    pub files: Vec<(String, Vec<u8>)>,
}

impl RunOutput {
    pub fn new(report: ExperimentReport, tables: Vec<Table>) -> Result<Self> {
        Ok(RunOutput { report: report.finish()?, tables, files: Vec::new() })
    }

    pub fn with_file(mut self, name: impl Into<String>, bytes: Vec<u8>) -> Self {
        self.files.push((name.into(), bytes));
        self
    }
}

/// Conjunction of several reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub reports: Vec<AggregateEntry>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateEntry {
    pub name: String,
    pub config_hash: String,
    pub pass: bool,
    pub failing: Vec<String>,
}

/// Aggregate reports; errors on an empty list or an invalid report.
pub fn emit_report(reports: &[ExperimentReport]) -> Result<(Aggregate, String)> {
    if reports.is_empty() {
        return Err(LabError::Report("no reports to aggregate".into()));
    }
    let mut entries = Vec::new();
    for r in reports {
        let r = r.clone().finish()?;
        entries.push(AggregateEntry {
            name: r.name.clone(),
            config_hash: r.config_hash.clone(),
            pass: r.pass,
            failing: r.failing().map(|c| c.key.clone()).collect(),
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    let mut text = String::new();
    let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(4).max(10);
    writeln!(text, "{:<width$}  {:<16}  result", "experiment", "config").unwrap();
    for e in &entries {
        let verdict = if e.pass { "PASS".to_string() } else { format!("FAIL ({})", e.failing.join(", ")) };
        writeln!(text, "{:<width$}  {:<16}  {verdict}", e.name, e.config_hash).unwrap();
    }
    writeln!(text, "overall: {}", if pass { "PASS" } else { "FAIL" }).unwrap();
    Ok((Aggregate { reports: entries, pass }, text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LawConfig;

    fn cfg() -> RunConfig {
        RunConfig::new(LawConfig::cauchy(3), vec![8])
    }

    #[test]
    fn pass_is_conjunction_of_checks() {
        let mut r = ExperimentReport::new("x", &cfg());
        r.stat(Stat::exact("a", 1.0));
        r.check(Check::at_most("a", 1.0, 2.0));
        assert!(r.clone().finish().unwrap().pass);
        r.check(Check::within("b", 3.0, 0.0, 2.0));
        let r = r.finish().unwrap();
        assert!(!r.pass);
        assert_eq!(r.failing().map(|c| c.key.as_str()).collect::<Vec<_>>(), vec!["b"]);
    }

    #[test]
    fn empty_stats_rejected() {
        let r = ExperimentReport::new("x", &cfg());
        assert!(r.clone().finish().is_err());
        assert!(emit_report(&[r]).is_err());
        assert!(emit_report(&[]).is_err());
    }

    #[test]
    fn aggregate_names_failing_statistic() {
        let mut good = ExperimentReport::new("good", &cfg());
        good.stat(Stat::exact("a", 1.0)).check(Check::holds("a", true));
        let mut bad = ExperimentReport::new("bad", &cfg());
        bad.stat(Stat::exact("ks", 0.5)).check(Check::at_most("ks", 0.5, 0.1));
        let (agg, text) = emit_report(&[good.clone()]).unwrap();
        assert!(agg.pass);
        let (agg, text2) = emit_report(&[good, bad]).unwrap();
        assert!(!agg.pass);
        assert!(text.contains("overall: PASS"));
        assert!(text2.contains("FAIL (ks)"), "{text2}");
    }

    #[test]
    fn csv_is_stable() {
        let mut t = Table::new("demo", &["n", "value", "label"]);
        t.push(vec![8u32.into(), 0.1.into(), "x".into()]);
        t.push(vec![16u32.into(), 2.0.into(), "y".into()]);
        let csv = t.to_csv("abc", 7);
        assert_eq!(csv, "# rcmlab demo config_hash=abc seed=7\nn,value,label\n8,0.1,x\n16,2.0,y\n");
    }
}
