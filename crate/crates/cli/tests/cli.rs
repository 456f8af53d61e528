use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn enflo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enflo")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> Value {
    let out = enflo(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn schema() -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/report.v1.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn space_info_standard_and_custom() {
    let r = report(&["space", "info", "--n", "3"]);
    assert_eq!(r["parameters"]["q"], 16);
    assert_eq!(r["parameters"]["d"], 54);
    let r = report(&["space", "info", "--q", "8", "--d", "2", "--p", "2", "--L", "1"]);
    for level in r["report"]["levels"].as_array().unwrap() {
        assert_eq!(level["segments_formula"], "256");
        assert_eq!(level["segments_enumerated"], 256);
    }
    assert_eq!(r["report"]["group_order"], "512");
}

#[test]
fn invalid_spec_exits_with_usage_code() {
    let out = enflo(&["space", "info", "--q", "8", "--d", "4", "--p", "2", "--L", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not divisible"));
    assert_eq!(enflo(&["verify", "nothing"]).status.code(), Some(2));
}

#[test]
fn exact_mode_refuses_standard_scale() {
    let out = enflo(&["verify", "chain", "--n", "3", "--exact"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--mode sampled"));
}

#[test]
fn budget_env_var_is_honoured() {
    let out = Command::new(env!("CARGO_BIN_EXE_enflo"))
        .args(["verify", "graph"])
        .env("ENFLO_BUDGET_POINTS", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verification_examples_pass() {
    for args in [
        &["verify", "prop3", "--trials", "1000", "--exact"][..],
        &["verify", "prop2", "--n", "3", "--m", "2"],
        &["verify", "chain", "--q", "8", "--d", "4", "--p", "2", "--L", "2", "--maps", "10", "--exact"],
    ] {
        assert_eq!(report(args)["outcome"], "pass", "{args:?}");
    }
}

#[test]
fn every_report_matches_schema() {
    let validator = schema();
    let runs: [&[&str]; 12] = [
        &["space", "info", "--n", "4"],
        &["verify", "prop1", "--m", "0"],
        &["verify", "prop1", "--n", "3", "--mode", "sampled", "--trials", "5"],
        &["verify", "prop2", "--n", "4"],
        &["verify", "prop3", "--trials", "20", "--mode", "sampled"],
        &["verify", "chain", "--maps", "3"],
        &["verify", "chain", "--n", "3", "--mode", "sampled", "--maps", "2", "--samples", "100"],
        &["verify", "orbit"],
        &["verify", "graph", "--no-timestamp"],
        &["verify", "group", "--pairs", "10"],
        &["certify", "--embedding", "coordinate"],
        &["certify", "--n", "3", "--mode", "sampled", "--samples", "50"],
    ];
    for args in runs {
        let r = report(args);
        let errors: Vec<String> = validator.iter_errors(&r).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
    let bad = serde_json::json!({ "schema_version": "1.0.0" });
    assert!(!validator.is_valid(&bad));
}

#[test]
fn exact_numbers_are_strings() {
    let r = report(&["verify", "chain", "--maps", "1", "--no-timestamp"]);
    assert!(r["report"]["maps"][0]["means"][0].is_string());
    assert!(r.get("timestamp").is_none() && r.get("timings").is_none());
    let r = report(&["verify", "chain", "--maps", "1", "--mode", "sampled", "--samples", "50"]);
    assert!(r["report"]["maps"][0]["means"][0].is_number());
    assert!(r["timestamp"].is_u64());
}

#[test]
fn csv_only_for_mean_tables() {
    let out = enflo(&["verify", "chain", "--maps", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("map,level,value,stderr,samples"));
    assert_eq!(lines.count(), 4);
    assert_eq!(enflo(&["verify", "prop3", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn certify_circle_and_constant_table() {
    let r = report(&["certify", "--embedding", "circle"]);
    let ratio = r["report"]["certificate"]["ratio"].as_f64().unwrap();
    assert!((ratio - 1.307).abs() < 1e-3);
    assert!((r["report"]["certificate"]["bound"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);

    let table = scratch("constant.csv");
    let rows: String = (0..8).flat_map(|a| (0..8).map(move |b| format!("{a},{b},1/2,3\n"))).collect();
    fs::write(&table, rows).unwrap();
    let r = report(&["certify", "--embedding", table.to_str().unwrap()]);
    assert_eq!(r["outcome"], "degenerate");
}

#[test]
fn sampled_certificate_at_standard_scale_is_an_illustration() {
    let r = report(&["certify", "--n", "4", "--mode", "sampled", "--samples", "200"]);
    assert_eq!(r["outcome"], "illustration");
}

#[test]
fn out_flag_and_export() {
    let path = scratch("prop2.json");
    let out = enflo(&["verify", "prop2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["command"], "verify prop2");

    let graph = String::from_utf8(enflo(&["export", "graph"]).stdout).unwrap();
    assert_eq!(graph.lines().count(), 64 * 8 / 2);
    let tree = String::from_utf8(enflo(&["export", "tree"]).stdout).unwrap();
    assert_eq!(tree.lines().count(), 63);
}
