//! Running experiments and laying their outputs out on disk.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::experiments;
use crate::parallel::Driver;
use crate::report::{emit_report, Aggregate, ExperimentReport, RunOutput};

/// File name of the aggregate written by [`aggregate_dir`].
pub const SUMMARY_FILE: &str = "summary.json";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

pub fn exit_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

/// Validate `cfg` and run experiment `name`.
pub fn execute(name: &str, cfg: &RunConfig, driver: &Driver) -> Result<RunOutput> {
    cfg.validate()?;
    experiments::run(name, cfg, driver)
}

/// Write `<name>.json`, one `<table>.csv` per table and the extra files into
/// `dir`. Returns the paths in write order.
pub fn write_output(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let r = &out.report;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| LabError::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put(&format!("{}.json", r.name), r.to_json().as_bytes())?;
    for t in &out.tables {
        put(&format!("{}.csv", t.name), t.to_csv(&r.config_hash, r.seed).as_bytes())?;
    }
    for (name, bytes) in &out.files {
        put(name, bytes)?;
    }
    Ok(written)
}

/// Every experiment report (`*.json` other than the summary) in `dir`,
/// ordered by file name.
pub fn collect_reports(dir: &Path) -> Result<Vec<ExperimentReport>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| LabError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|f| f != SUMMARY_FILE))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| LabError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| LabError::Report(format!("{}: {e}", p.display())))
        })
        .collect()
}

/// Aggregate the reports in `dir`, write the summary there and return it
/// with the text table.
pub fn aggregate_dir(dir: &Path) -> Result<(Aggregate, String)> {
    let reports = collect_reports(dir)?;
    let (agg, text) = emit_report(&reports)?;
    let path = dir.join(SUMMARY_FILE);
    let mut json = serde_json::to_string_pretty(&agg)?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| LabError::io(&path, e))?;
    Ok((agg, text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LawConfig;
    use crate::report::{Check, Stat, Table};

    fn output(pass: bool) -> RunOutput {
        let cfg = RunConfig::new(LawConfig::cauchy(2), vec![4]);
        let mut r = ExperimentReport::new("toy", &cfg);
        r.stat(Stat::exact("x", 1.0)).check(Check::holds("ok", pass));
        let mut t = Table::new("toy", &["a"]);
        t.push(vec![1.5.into()]);
        RunOutput::new(r, vec![t]).unwrap().with_file("extra.bin", vec![1, 2, 3])
    }

    #[test]
    fn outputs_and_aggregate_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_output(&output(false), dir.path()).unwrap();
        let names: Vec<_> = paths.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        assert_eq!(names, ["toy.json", "toy.csv", "extra.bin"]);
        let (agg, text) = aggregate_dir(dir.path()).unwrap();
        assert!(!agg.pass);
        assert!(text.contains("FAIL (ok)"));
        // the summary is not picked up as a report on the next pass
        assert_eq!(collect_reports(dir.path()).unwrap().len(), 1);
        assert_eq!(exit_code(agg.pass), EXIT_FAIL);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(aggregate_dir(dir.path()).is_err());
    }
}
