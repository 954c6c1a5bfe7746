use serde_json::Value;
use solab_core::catalog::entries;
use solab_core::selftest::run_selftest;
use solab_core::verify::{verify_catalog, VerifyOptions};

fn validator() -> jsonschema::Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(v: &jsonschema::Validator, text: &str, what: &str) {
    let doc: Value = serde_json::from_str(text).unwrap();
    let errors: Vec<String> = v
        .iter_errors(&doc)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{what}: {errors:#?}");
}

#[test]
fn catalog_and_verify_reports_match_the_schema() {
    let v = validator();
    for info in entries() {
        let r = verify_catalog(info.name, &VerifyOptions::default()).unwrap();
        assert_valid(&v, &r.to_json(), info.name);
        assert_valid(&v, &r.report.to_json(), info.name);
    }
}

#[test]
fn selftest_report_matches_the_schema() {
    assert_valid(&validator(), &run_selftest(3).to_json(), "selftest");
}

#[test]
fn schema_rejects_unknown_keys() {
    let v = validator();
    let r = verify_catalog("plane", &VerifyOptions::default()).unwrap();
    let mut doc: Value = serde_json::from_str(&r.to_json()).unwrap();
    doc["report"]["extra"] = Value::Bool(true);
    assert!(!v.is_valid(&doc));
}
