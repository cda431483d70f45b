use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rcmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcmlab")).args(args).env_remove("RCMLAB_THREADS").output().expect("spawn rcmlab")
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"law": {"d": 2}, "n": [8], "walkerz": 10}"#);
    let out = rcmlab(&["sigma", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("walkerz"), "{err}");
}

#[test]
fn missing_law_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rcmlab(&["sigma", "--n", "8", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let common = ["--law", "d=2", "--n", "4", "--walkers", "3000", "--seed", "9"];
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let mut args = vec!["walk", "--threads", threads, "--out", dir.to_str().unwrap()];
        args.extend(common);
        let out = rcmlab(&args);
        assert!(out.status.code().unwrap() <= 1, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let fa = files(&a);
    let fb = files(&b);
    assert!(fa.len() >= 2);
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(bytes == &fb[name], "{name} differs between thread counts");
    }
}

#[test]
fn failing_check_exits_one_and_report_aggregates() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let pass = write_config(
        tmp.path(),
        r#"{"law": {"d": 2}, "n": [4], "walkers": 20000, "thresholds": {"ks": 0.0}}"#,
    );
    let out = rcmlab(&["env-sample", "--config", &pass, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL"), "{stdout}");

    let rep = rcmlab(&["report", out_dir.to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(1));
    assert!(out_dir.join("summary.json").exists());
    let summary = fs::read_to_string(out_dir.join("summary.json")).unwrap();
    assert!(summary.contains("env-sample"));
}

#[test]
fn passing_run_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rcmlab(&[
        "heat-kernel",
        "--law",
        "d=2",
        "--n",
        "4",
        "--box",
        "5",
        "--times",
        "0.5,2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("heat-kernel.json").exists());
}
