use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use vertexlab::{run, SuiteConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vertexlab"));
    c.env_remove("VERTEXLAB_SEED");
    c
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vertexlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(name);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&v).unwrap()
}

fn assert_valid(schema: &jsonschema::JSONSchema, doc: &Value) {
    if let Err(errors) = schema.validate(doc) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("schema violations: {msgs:?}");
    }
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn every_suite_report_matches_the_schema() {
    let s = schema("report.json");
    for suite in vertexlab::SUITES {
        let out = bin().args(["run", "--suite", suite]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&out.stderr));
        assert_valid(&s, &json(&out));
    }
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = bin().args(["run", "--suite", "no-such-suite"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
    let out = bin().args(["run", "--suite", "csos-spectrum", "--pp", "6,4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["run", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failures_exit_one_and_still_write_the_report() {
    let path = tmp("tight.json");
    let out = bin()
        .args(["run", "--suite", "vertex-identities", "--samples", "3", "--tol", "1e-300", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_valid(&schema("report.json"), &rep);
    assert!(rep["summary"]["failed"].as_u64().unwrap() > 0);
    assert_eq!(rep["summary"]["count"].as_u64().unwrap(), rep["rows"].as_array().unwrap().len() as u64);
}

#[test]
fn exhausted_budget_truncates_visibly() {
    let out = bin().args(["run", "--suite", "sos-identities", "--budget", "1e-9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let rep = json(&out);
    assert_eq!(rep["summary"]["truncated"], Value::Bool(true));
    assert!(rep["summary"]["skipped"].as_u64().unwrap() > 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncated"));
}

#[test]
fn reruns_are_byte_identical() {
    for format in ["json", "csv"] {
        let args = ["run", "--suite", "equivalence", "--seed", "11", "--format", format];
        let a = bin().args(args).output().unwrap();
        let b = bin().args(args).output().unwrap();
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn timings_are_opt_in() {
    let plain = json(&bin().args(["run", "--suite", "rsos-probe"]).output().unwrap());
    assert_eq!(plain["summary"]["wall_time_ms"], Value::Null);
    let timed = json(&bin().args(["run", "--suite", "rsos-probe", "--timings"]).output().unwrap());
    assert!(timed["summary"]["wall_time_ms"].is_u64());
    assert_eq!(plain["config_digest"], timed["config_digest"]);
}

#[test]
fn seed_comes_from_flag_then_environment() {
    let env = json(&bin().env("VERTEXLAB_SEED", "42").args(["run", "--suite", "rsos-probe"]).output().unwrap());
    assert_eq!(env["seed"], 42);
    let flag = json(&bin().env("VERTEXLAB_SEED", "42").args(["run", "--suite", "rsos-probe", "--seed", "5"]).output().unwrap());
    assert_eq!(flag["seed"], 5);
    let out = bin().env("VERTEXLAB_SEED", "x").args(["run", "--suite", "rsos-probe"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_overrides_flags() {
    let path = tmp("config.json");
    std::fs::write(&path, r#"{"suite": "rsos-probe", "seed": 99, "rsos_p": [3]}"#).unwrap();
    let out = bin()
        .args(["run", "--suite", "csos-spectrum", "--seed", "1", "--config"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert_eq!(rep["suite"], "rsos-probe");
    assert_eq!(rep["seed"], 99);
    assert_eq!(rep["rows"].as_array().unwrap().len(), 2);

    // Flags fill in what the file leaves out.
    std::fs::write(&path, r#"{"rsos_p": [4]}"#).unwrap();
    let rep = json(&bin().args(["run", "--suite", "rsos-probe", "--seed", "3", "--config"]).arg(&path).output().unwrap());
    assert_eq!(rep["seed"], 3);
    assert!(rep["rows"][0]["id"].as_str().unwrap().ends_with("/4"));

    std::fs::write(&path, r#"{"suite": "rsos-probe", "unknown": 1}"#).unwrap();
    let out = bin().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csos_table_rows_for_the_ising_pair() {
    let cfg = SuiteConfig { suite: "csos-spectrum".into(), pp: vec![[4, 3]], ..SuiteConfig::default() };
    let rep = run(&cfg).unwrap();
    assert!(rep.all_pass());
    let c = rep.row("table/04-03/c").unwrap();
    assert_eq!(c.value.as_deref(), Some("1/2"));
    let h = rep.row("table/04-03/h13").unwrap();
    assert_eq!(h.value.as_deref(), Some("1/2"));
    assert!(h.pass);
}

#[test]
fn spectrum_table_has_25_rows_and_is_stable() {
    let path = tmp("spectrum.csv");
    let args = ["tables", "--kind", "spectrum", "--pp", "5,4"];
    let out = bin().args(args).arg("--out").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(&path).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().count(), 1 + 25);
    assert!(text.starts_with("p,p_prime,e_num,e_den,m,"));
    bin().args(args).arg("--out").arg(&path).output().unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);

    let j = bin().args(args).args(["--format", "json"]).output().unwrap();
    let v: Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v.as_array().map(Vec::len), Some(25));
}

#[test]
fn weight_table_covers_seven_heights() {
    let out = bin().args(["tables", "--kind", "weights"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 42);
}

#[test]
fn unwritable_output_is_reported() {
    let out = bin()
        .args(["tables", "--kind", "spectrum", "--pp", "5,4", "--out", "/nonexistent-dir/x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn lattice_files_validate_and_drive_runs() {
    let path = tmp("lattice.json");
    let out = bin().args(["lattice", "--size", "2x2", "--seed", "3", "--out"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_valid(&schema("lattice.json"), &doc);

    let mut with_tail = doc.clone();
    with_tail["tail"] = serde_json::json!({"anchor": [1, 0], "steps": "U", "insertion": "V1.1"});
    assert_valid(&schema("lattice.json"), &with_tail);
    let parsed: vertexlab::lattice_io::LatticeFile = serde_json::from_value(with_tail).unwrap();
    assert!(parsed.tail_path().unwrap().is_some());

    let out = bin().args(["run", "--suite", "equivalence", "--lattice"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["rows"].as_array().unwrap().iter().all(|r| r["id"].as_str().unwrap().contains("/2x2")));
}
