use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn uvlag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uvlag")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn schema() -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/uvlag-report-1.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(report: &Value) {
    let v = schema();
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn records<'a>(report: &'a Value, id: &str, problem: &str) -> Vec<&'a Value> {
    report["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["id"] == id && r["problem"] == problem)
        .collect()
}

fn strip_wall_times(mut report: Value) -> Value {
    for r in report["records"].as_array_mut().unwrap() {
        r["wall_time_ms"] = Value::from(0.0);
    }
    report
}

#[test]
fn base_identity_written_to_file() {
    let dir = std::env::temp_dir().join(format!("uvlag-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.json");
    let out = uvlag(&["run", "--problem", "P1", "--check", "ulag-core", "--seed", "0", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_valid(&r);
    let base = records(&r, "ulag-core/base-identity", "P1");
    assert_eq!(base.len(), 1);
    assert_eq!(base[0]["verdict"], "pass");
    assert!(base[0]["max_violation"].as_f64().unwrap() <= 1e-9);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn expected_failure_keeps_exit_zero() {
    let out = uvlag(&["run", "--problem", "P2", "--check", "proxreg", "--rho", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_valid(&r);
    let rec = records(&r, "proxreg/function", "P2");
    assert_eq!(rec.len(), 1);
    assert_eq!(rec[0]["verdict"], "fail");
    assert_eq!(rec[0]["expected"], "fail");
    let xp: Vec<f64> = serde_json::from_value(rec[0]["witness"]["x_prime"].clone()).unwrap();
    assert_eq!(xp, vec![0.5, 0.0]);
    assert_eq!(r["summary"]["expected_fail"], 1);
    assert_eq!(r["summary"]["fail"], 0);
}

#[test]
fn unexpected_verdict_exits_one() {
    let out = uvlag(&["run", "--problem", "P2", "--check", "ulag-core", "--rho", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_valid(&r);
    assert!(r["summary"]["fail"].as_u64().unwrap() > 0);
}

#[test]
fn configuration_errors_exit_two() {
    for args in [
        vec!["run", "--problem", "P7"],
        vec!["run", "--problem", "P1", "--eps", "0.9", "--eps-bar", "0.5"],
        vec!["run", "--problem", "P1", "--eps", "1.5"],
        vec!["run", "--problem", "P1", "--check", "nonsense"],
        vec!["run", "--problem", "P1", "--grid-n", "1"],
        vec!["run"],
        vec!["bogus"],
    ] {
        let out = uvlag(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn full_suite_is_valid_and_deterministic() {
    let a = uvlag(&["run", "--all"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = uvlag(&["run", "--all"]);
    let (ra, rb) = (report(&a), report(&b));
    assert_valid(&ra);
    let s = &ra["summary"];
    let total = s["pass"].as_u64().unwrap() + s["fail"].as_u64().unwrap() + s["expected_fail"].as_u64().unwrap();
    assert_eq!(total as usize, ra["records"].as_array().unwrap().len());
    assert_eq!(s["fail"], 0);
    for rec in ra["records"].as_array().unwrap() {
        assert!(!rec["anchor"].as_str().unwrap().is_empty());
    }
    assert_eq!(
        serde_json::to_string(&strip_wall_times(ra)).unwrap(),
        serde_json::to_string(&strip_wall_times(rb)).unwrap()
    );
}

#[test]
fn records_are_ordered_by_check_id() {
    let r = report(&uvlag(&["run", "--problem", "P6", "--problem", "P1", "--check", "uv-geometry", "--check", "tilt"]));
    let keys: Vec<(String, String)> = r["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| (x["id"].as_str().unwrap().to_string(), x["problem"].as_str().unwrap().to_string()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(keys.iter().any(|k| k.1 == "P1") && keys.iter().any(|k| k.1 == "P6"));
}
