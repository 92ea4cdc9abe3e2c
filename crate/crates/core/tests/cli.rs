use std::path::Path;

use nalgebra::DVector;
use relaxkit::{cli, gen, io};
use serde_json::Value;

fn run(args: &[&str], env: Option<&str>) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run_with_env(
        std::iter::once("relaxkit").chain(args.iter().copied()),
        env.map(String::from),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn generated_relaxation_classifies_and_realizes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, model, _) = run(&["generate", "relaxation", "--seed", "4", "--modes", "3", "--inputs", "2", "--rank", "2"], None);
    assert_eq!(code, 0);
    let (sys, _) = io::parse_model(&model).unwrap();
    let scrambled = gen::scrambled(&sys, 9).unwrap();
    let path = write(dir.path(), "m.json", &io::model_to_string(&scrambled, None).unwrap());

    let (code, report, _) = run(&["classify", &path], None);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["verdict"], true);
    assert_eq!(v["tol"], 1e-8);

    let (code, realized, _) = run(&["realize", &path], None);
    assert_eq!(code, 0);
    let (real, _) = io::parse_model(&realized).unwrap();
    assert_eq!(real.a(), &real.a().transpose());
    assert_eq!(real.b(), &real.c().transpose());
}

#[test]
fn realize_refuses_non_relaxation() {
    let dir = tempfile::tempdir().unwrap();
    let sys = gen::random_nonrelaxation(1, gen::NonRelaxationKind::IndefiniteResidue);
    let path = write(dir.path(), "m.json", &io::model_to_string(&sys, None).unwrap());
    let (code, _, err) = run(&["realize", &path], None);
    assert_eq!(code, 1);
    assert!(err.contains("not a relaxation"));
}

#[test]
fn tolerance_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let sys = gen::rc_two_port(1.0, 1.0, 1.0).unwrap();
    let path = write(dir.path(), "rc.json", &io::model_to_string(&sys, None).unwrap());
    let tol_of = |args: &[&str], env| {
        let (_, report, _) = run(args, env);
        serde_json::from_str::<Value>(&report).unwrap()["tol"].as_f64().unwrap()
    };
    assert_eq!(tol_of(&["classify", &path], Some("1e-6")), 1e-6);
    assert_eq!(tol_of(&["classify", &path, "--tol", "1e-7"], Some("1e-6")), 1e-7);
    assert_eq!(tol_of(&["--tol", "1e-5", "classify", &path], None), 1e-5);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let sys = gen::rc_two_port(1.0, 1.0, 1.0).unwrap();
    let path = write(dir.path(), "rc.json", &io::model_to_string(&sys, None).unwrap());
    let (code, stdout, _) = run(&["passivity", &path, "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["result"]["inertia"], serde_json::json!([1, 0, 0]));
}

#[test]
fn storage_trace_and_gradient_check() {
    let dir = tempfile::tempdir().unwrap();
    let sys = gen::rc_two_port(1.0, 1.0, 1.0).unwrap();
    let model = write(dir.path(), "rc.json", &io::model_to_string(&sys, None).unwrap());
    let dt = 0.01;
    let u = gen::smooth_input(3, 2, 2600, dt);
    let signal = write(dir.path(), "u.json", &io::signal_to_string(dt, &u).unwrap());

    let (code, report, _) = run(&["storage-trace", &model, &signal], None);
    assert_eq!(code, 0, "{report}");
    let v: Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["result"]["dt"], dt);
    assert!(v["result"]["max_residual"].as_f64().unwrap() <= v["result"]["threshold"].as_f64().unwrap());

    let (code, _, err) = run(&["gradient-check", &model, "--seed", "2"], None);
    assert_eq!(code, 0);
    assert!(err.is_empty());
    let (code, _, err) = run(&["gradient-check", &model], None);
    assert_eq!(code, 0);
    assert!(err.contains("seed 0"));

    let wrong = write(dir.path(), "w.json", &io::signal_to_string(dt, &vec![DVector::zeros(3); 10]).unwrap());
    let (code, _, err) = run(&["storage-trace", &model, &wrong], None);
    assert_eq!(code, 2);
    assert!(err.contains("channels"));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing_d = write(
        dir.path(),
        "nod.json",
        r#"{"schema_version": "relaxkit.model/1", "A": [[-1.0]], "B": [[1.0]], "C": [[1.0]]}"#,
    );
    let (code, _, err) = run(&["classify", &missing_d], None);
    assert_eq!(code, 2);
    assert!(err.contains('D'), "{err}");

    let unstable = write(
        dir.path(),
        "u.json",
        r#"{"schema_version": "relaxkit.model/1", "A": [[0.5]], "B": [[1.0]], "C": [[1.0]], "D": [[0.0]]}"#,
    );
    let (code, _, err) = run(&["hankel", &unstable, "--seed", "0"], None);
    assert_eq!(code, 3);
    assert!(err.contains("abscissa"));

    let (code, _, _) = run(&["hankel", &unstable, "--certify", "4"], None);
    assert_eq!(code, 2);
}
