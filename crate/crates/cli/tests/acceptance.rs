//! Acceptance criteria 1 to 14, one pass/fail line each.
//!
//! Criteria 1 to 13 come from `solab selftest --json`; 14 runs it a second time
//! and compares the bytes.

use std::process::{Command, ExitCode};

use solab_core::selftest::SelftestReport;

fn selftest_json() -> (Vec<u8>, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_solab"))
        .args(["selftest", "--json"])
        .env_remove("SOLAB_SEED")
        .output()
        .expect("solab binary runs");
    (out.stdout, out.status.code())
}

fn main() -> ExitCode {
    let (first, code) = selftest_json();
    let (second, _) = selftest_json();
    let text = String::from_utf8(first.clone()).expect("utf-8 report");
    let report = match SelftestReport::from_json(&text) {
        Ok(r) => r,
        Err(e) => {
            println!("selftest output is not a report ({e}); exit code {code:?}");
            return ExitCode::FAILURE;
        }
    };

    let mut failed = 0;
    for c in &report.criteria {
        let mark = if c.passed { "pass" } else { "FAIL" };
        println!("criterion {:>2} {mark}  {}", c.id, c.name);
        if !c.passed {
            failed += 1;
            if let Some(e) = &c.error {
                println!("             error: {e}");
            }
            for m in c.measurements.iter().filter(|m| !m.passed) {
                let v = m.value.map_or("non-finite".into(), |v| format!("{v:e}"));
                println!("             {}: {v} vs limit {:e}", m.label, m.limit);
            }
        }
    }
    let ids: Vec<u32> = report.criteria.iter().map(|c| c.id).collect();
    let mut problems = 0;
    if ids != (1..=13).collect::<Vec<_>>() {
        println!("selftest reported criteria {ids:?}, expected 1 to 13");
        problems += 1;
    }
    let same = first == second;
    println!(
        "criterion 14 {}  selftest --json is byte-identical across runs",
        if same { "pass" } else { "FAIL" }
    );
    if !same {
        failed += 1;
    }
    let expected_code = if report.passed { 0 } else { 1 };
    if code != Some(expected_code) {
        println!("selftest exited with {code:?}, expected {expected_code}");
        problems += 1;
    }

    println!("{} of 14 criteria pass", 14 - failed);
    if failed + problems == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
