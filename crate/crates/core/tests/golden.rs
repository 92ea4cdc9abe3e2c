//! Golden corpus: checked-in models, their expected reports and exit codes.
//! Set `RELAXKIT_BLESS=1` to rewrite the expected reports.

mod common;

use common::{expected_report_path, golden_dir, run_golden, GOLDEN_CASES};

#[test]
fn golden_reports_and_exit_codes() {
    let bless = std::env::var_os("RELAXKIT_BLESS").is_some();
    let mut failures = Vec::new();
    for (model, extra, command, expected_code) in GOLDEN_CASES {
        let (code, report) = run_golden(command, model, extra);
        let expected_path = expected_report_path(model, command);
        if bless {
            std::fs::create_dir_all(expected_path.parent().unwrap()).unwrap();
            std::fs::write(&expected_path, &report).unwrap();
        }
        let expected = std::fs::read_to_string(&expected_path).unwrap_or_default();
        if code != *expected_code {
            failures.push(format!("{command} {model}: exit {code}, expected {expected_code}"));
        }
        if report != expected {
            failures.push(format!("{command} {model}: report differs from {}", expected_path.display()));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn reports_are_reproducible() {
    for (model, extra, command, _) in GOLDEN_CASES {
        assert_eq!(run_golden(command, model, extra), run_golden(command, model, extra), "{command} {model}");
    }
}

#[test]
fn rc_file_matches_generator() {
    let (sys, _) = relaxkit::io::load_model(golden_dir().join("rc.json")).unwrap();
    assert_eq!(sys, relaxkit::gen::rc_two_port(1.0, 1.0, 1.0).unwrap());
    let (_, report) = run_golden("classify", "rc", &[]);
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    for test in ["complete_monotonicity", "modal", "symmetric_realization", "markov_hankel"] {
        assert_eq!(v["result"][test]["status"], "pass", "{test}");
    }
}

#[test]
fn hankel_certify_prints_cycle_sums() {
    let (code, report) = run_golden("hankel", "rc", &["--certify", "n=4", "--seed", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    let cycles = v["result"]["cycles"].as_array().unwrap();
    assert_eq!(cycles.len(), 4);
    assert!(cycles.iter().all(|c| c["worst_sum"].is_number()));
}
