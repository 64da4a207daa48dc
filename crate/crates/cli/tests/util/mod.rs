//! Shared helpers for driving the compiled binary in tests.

use std::path::Path;
use std::process::Command;

use serde_json::Value;

pub fn fgscan() -> &'static str {
    env!("CARGO_BIN_EXE_fgscan")
}

/// Run the binary; returns (exit code, stdout, stderr).
pub fn run(args: &[&str], envs: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(fgscan());
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub fn parse_report(stdout: &str) -> Value {
    serde_json::from_str(stdout).expect("stdout is a JSON report")
}

/// Remove fields that are allowed to differ between equivalent runs.
pub fn strip(report: &Value, keys: &[&str]) -> Value {
    let mut copy = report.clone();
    if let Value::Object(map) = &mut copy {
        for key in keys {
            map.remove(*key);
        }
    }
    copy
}

pub fn assert_matches_schema(schema_file: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(schema_file);
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(&path).expect("schema file exists"))
            .expect("schema parses");
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    if let Err(err) = validator.validate(instance) {
        panic!("{schema_file} violation: {err}");
    }
}

/// Validate the whole report: envelope plus the per-command results schema.
pub fn assert_report_valid(command: &str, report: &Value) {
    assert_matches_schema("envelope.schema.json", report);
    assert_matches_schema(&format!("{command}.schema.json"), &report["results"]);
}
