use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const REVERSAL: &str = include_str!("../../../config/synth_reversal.toml");

fn uemr(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uemr"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn synth_reversal(out: &Path) {
    let spec = out.join("spec.toml");
    fs::create_dir_all(out).unwrap();
    fs::write(&spec, REVERSAL).unwrap();
    ok(&uemr(out, &["synth", "--spec", spec.to_str().unwrap()]));
}

fn result(out: &Path, name: &str) -> Value {
    let text = fs::read_to_string(out.join("reports").join(format!("{name}.json"))).unwrap();
    serde_json::from_str::<Value>(&text).unwrap()["result"].clone()
}

#[test]
fn full_pipeline_is_reproducible_and_reports() {
    let a = tempfile::tempdir().unwrap();
    let names = ["populations", "excess", "polarisation", "fine", "control", "t1", "t2", "t3", "eclipse", "thermal"];
    let mut first = Vec::new();
    for round in 0..2 {
        let _ = fs::remove_dir_all(a.path().join("reports"));
        synth_reversal(a.path());
        ok(&uemr(a.path(), &["analyze", "--which", "all"]));
        for (i, name) in names.iter().enumerate() {
            let bytes = fs::read(a.path().join("reports").join(format!("{name}.json"))).unwrap();
            if round == 0 {
                first.push(bytes);
            } else {
                assert_eq!(first[i], bytes, "{name}.json differs between identical runs");
            }
        }
    }
    let r = uemr(a.path(), &["report"]);
    ok(&r);
    let md = fs::read_to_string(a.path().join("report.md")).unwrap();
    for section in ["## Populations", "## DTC flux excess", "## Eclipse dependence", "## Effect-size summary", "True ratio"] {
        assert!(md.contains(section), "report lacks {section}");
    }
    assert!(!md.contains("## Warnings"));
    assert!(a.path().join("tables/eclipse_strata.csv").is_file());
}

#[test]
fn eclipse_reversal_has_opposite_signs() {
    let d = tempfile::tempdir().unwrap();
    synth_reversal(d.path());
    ok(&uemr(d.path(), &["analyze", "--which", "eclipse"]));
    let r = result(d.path(), "eclipse");
    let pops = r["populations"].as_array().unwrap();
    let level = |g: &str| {
        let p = pops.iter().find(|p| p["group"] == g).unwrap();
        let l = &p["detection_level"];
        (l["estimate"].as_f64().unwrap(), l["ci_low"].as_f64().unwrap(), l["ci_high"].as_f64().unwrap())
    };
    let dtc = level("dtc");
    let ku = level("ku_only");
    assert!(dtc.2 < 1.0, "DTC interval {dtc:?}");
    assert!(ku.1 > 1.0, "Ku interval {ku:?}");
}

#[test]
fn t1_needs_no_catalogue() {
    let d = tempfile::tempdir().unwrap();
    ok(&uemr(d.path(), &["analyze", "--which", "t1"]));
    let r = result(d.path(), "t1");
    assert_eq!(r["clock"]["observed_matches"], 5);
    let e = r["clock"]["expected_chance"].as_f64().unwrap();
    assert!((e - 5.7355).abs() < 1e-3, "{e}");
}

#[test]
fn unknown_analysis_is_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = uemr(d.path(), &["analyze", "--which", "bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_bus_table_writes_nothing() {
    let d = tempfile::tempdir().unwrap();
    let det = d.path().join("det.csv");
    fs::write(&det, "norad_id,utc\n").unwrap();
    let out = d.path().join("out");
    let o = uemr(
        &out,
        &["ingest", "--detections", det.to_str().unwrap(), "--bus-table", d.path().join("nope.tsv").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn analyze_without_catalogue_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    let o = uemr(d.path(), &["analyze", "--which", "excess"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ingest_round_trips_synthetic_raw_files() {
    let d = tempfile::tempdir().unwrap();
    ok(&uemr(d.path(), &["synth"]));
    let before = result(d.path(), "populations");
    let other = d.path().join("again");
    let o = uemr(
        &other,
        &[
            "ingest",
            "--detections",
            d.path().join("synth/detections.csv").to_str().unwrap(),
            "--bus-table",
            d.path().join("synth/bus_table.csv").to_str().unwrap(),
        ],
    );
    ok(&o);
    ok(&uemr(&other, &["tag"]));
    let after = result(&other, "populations");
    assert_eq!(before["rows"], after["rows"]);
    assert_eq!(after["rejected_rows"], 0);
}

#[test]
fn bad_config_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    fs::write(&cfg, "[stats]\nfdr_q = 7.0\n").unwrap();
    let o = uemr(d.path(), &["--config", cfg.to_str().unwrap(), "analyze", "--which", "t1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_uemr")).args(["--config", d.path().join("absent.toml").to_str().unwrap(), "report"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_on_empty_directory_warns() {
    let d = tempfile::tempdir().unwrap();
    let o = uemr(d.path(), &["report"]);
    ok(&o);
    let md = fs::read_to_string(d.path().join("report.md")).unwrap();
    assert!(md.contains("## Warnings"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}
