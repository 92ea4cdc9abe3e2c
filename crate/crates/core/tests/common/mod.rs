#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DVector;
use relaxkit::gen::{self, ExpPoly};
use relaxkit::hankel::{self, HankelDiscretization, QuadratureGrid, SampledSignal};

/// Coordinate exponentials `eᵢ e^{−τ}` followed by `random` seeded
/// exponential polynomials.
pub fn probes(grid: &Arc<QuadratureGrid>, channels: usize, seed: u64, random: usize) -> Vec<SampledSignal> {
    let mut out: Vec<SampledSignal> = (0..channels)
        .map(|i| {
            let mut e = DVector::zeros(channels);
            e[i] = 1.0;
            ExpPoly::exponential(e, 1.0).unwrap().sample(grid).unwrap()
        })
        .collect();
    out.extend((0..random as u64).map(|k| {
        gen::random_exp_poly(seed.wrapping_mul(1_000_003).wrapping_add(k), channels, 3)
            .sample(grid)
            .unwrap()
    }));
    out
}

/// Largest adjointness defect over all ordered probe pairs.
pub fn max_adjointness(hd: &HankelDiscretization, probes: &[SampledSignal]) -> f64 {
    let mut worst = 0.0f64;
    for (i, u) in probes.iter().enumerate() {
        for w in &probes[i + 1..] {
            worst = worst.max(hankel::adjointness_defect(hd, u, w).unwrap());
        }
    }
    worst
}

/// Relative deviation `|a − b| / max(|a|, |b|, floor)`.
pub fn rel_diff(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn golden_dir() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Golden corpus: (model, extra args, command, expected exit code).
pub const GOLDEN_CASES: &[(&str, &[&str], &str, i32)] = &[
    ("rc", &[], "classify", 0),
    ("first_order", &[], "classify", 0),
    ("oscillator", &[], "classify", 1),
    ("gyrator", &[], "classify", 1),
    ("rc", &[], "passivity", 0),
    ("first_order", &[], "passivity", 0),
    ("oscillator", &[], "passivity", 1),
    ("gyrator", &[], "passivity", 1),
    ("rc", &["--certify", "n=4", "--seed", "1"], "hankel", 0),
    ("first_order", &["--certify", "n=4", "--seed", "1"], "hankel", 0),
    ("oscillator", &["--certify", "n=4", "--seed", "1"], "hankel", 1),
    ("gyrator", &["--certify", "n=4", "--seed", "1"], "hankel", 1),
];

/// Runs one CLI command on a golden model with no environment tolerance.
pub fn run_golden(command: &str, model: &str, extra: &[&str]) -> (i32, String) {
    let path = golden_dir().join(format!("{model}.json"));
    let mut args = vec!["relaxkit".to_string(), command.to_string(), path.display().to_string()];
    args.extend(extra.iter().map(|s| s.to_string()));
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = relaxkit::cli::run_with_env(args, None, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

pub fn expected_report_path(model: &str, command: &str) -> std::path::PathBuf {
    golden_dir().join("expected").join(format!("{model}.{command}.json"))
}
