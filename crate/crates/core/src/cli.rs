//! Command-line front end. Every command writes one JSON report and maps its
//! verdict to the exit code: 0 true, 1 false, 2 usage or input error,
//! 3 numeric failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classify::{self, ClassificationReport, ClassifyConfig};
use crate::error::{Error, Result};
use crate::gen::{self, NonRelaxationKind};
use crate::hankel::{self, CycleReport, NumericalRange, PositivityCertificate};
use crate::io;
use crate::passivity::{self, LemmaVerdict, TCertificate};
use crate::storage::{self, StorageTrace};
use crate::StateSpaceModel;

pub const TOL_ENV: &str = "RELAXKIT_TOL";

pub const EXIT_TRUE: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "relaxkit", version, about = "Relaxation-system analysis for LTI state-space models")]
struct Cli {
    /// Tolerance override for every test (default per command, or $RELAXKIT_TOL).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every relaxation test on a model.
    Classify { model: PathBuf },
    /// Emit an internally symmetric realization of a relaxation model.
    Realize { model: PathBuf },
    /// Discretize the Hankel operator and certify positivity and cyclic monotonicity.
    Hankel {
        model: PathBuf,
        #[arg(long, default_value_t = hankel::DEFAULT_PANELS)]
        panels: usize,
        #[arg(long, default_value_t = hankel::DEFAULT_NODES_PER_PANEL)]
        nodes: usize,
        /// Cycle orders to search, as `n=N`.
        #[arg(long, value_parser = parse_certify)]
        certify: Option<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Random samples for the numerical-range estimate.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Storage and dissipation residuals along a simulated trajectory.
    StorageTrace {
        model: PathBuf,
        signal: PathBuf,
        /// Sample spacing; defaults to the signal's own uniform step.
        #[arg(long)]
        dt: Option<f64>,
        /// Start of the evaluation window; defaults to the quadrature horizon.
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long, default_value_t = hankel::DEFAULT_PANELS)]
        panels: usize,
        #[arg(long, default_value_t = hankel::DEFAULT_NODES_PER_PANEL)]
        nodes: usize,
    },
    /// Compare finite differences of the storage functional with the Hankel operator.
    GradientCheck {
        model: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve for the T certificate and run the passivity checks built on it.
    Passivity { model: PathBuf },
    /// Write a generated model file.
    Generate {
        #[command(subcommand)]
        family: Family,
    },
}

#[derive(Debug, Subcommand)]
enum Family {
    Relaxation {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 3)]
        modes: usize,
        #[arg(long, default_value_t = 2)]
        inputs: usize,
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long)]
        feedthrough: bool,
    },
    Nonrelaxation {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    Rc {
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = 1.0)]
        cap: f64,
        #[arg(long, default_value_t = 1.0)]
        r2: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    ComplexPole,
    IndefiniteResidue,
    Asymmetric,
}

impl From<KindArg> for NonRelaxationKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::ComplexPole => NonRelaxationKind::ComplexPole,
            KindArg::IndefiniteResidue => NonRelaxationKind::IndefiniteResidue,
            KindArg::Asymmetric => NonRelaxationKind::Asymmetric,
        }
    }
}

fn parse_certify(s: &str) -> std::result::Result<usize, String> {
    let n = s
        .strip_prefix("n=")
        .ok_or_else(|| format!("expected n=N, got `{s}`"))?
        .parse::<usize>()
        .map_err(|e| e.to_string())?;
    if n < 1 {
        return Err("cycle order must be at least 1".into());
    }
    Ok(n)
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Validation { .. } | Error::Io(_) | Error::Domain(_) => EXIT_USAGE,
        Error::Numeric(_)
        | Error::UnstableForHankel { .. }
        | Error::NotModal(_)
        | Error::NonUnique { .. }
        | Error::Pole { .. } => EXIT_NUMERIC,
    }
}

/// Common report wrapper.
#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    label: Option<String>,
    tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    verdict: bool,
    result: T,
}

#[derive(Debug, Serialize)]
struct GridSummary {
    panels: usize,
    nodes_per_panel: usize,
    horizon: f64,
    self_test_error: f64,
}

#[derive(Debug, Serialize)]
struct HankelReport {
    grid: GridSummary,
    positivity: PositivityCertificate,
    certified: bool,
    adjointness_defect: f64,
    numerical_range: NumericalRange,
    cycles: Vec<CycleReport>,
}

#[derive(Debug, Serialize)]
struct StorageReport {
    dt: f64,
    burn_in: f64,
    samples: usize,
    max_residual: f64,
    max_abs_supply: f64,
    threshold: f64,
    trace: StorageTrace,
}

#[derive(Debug, Serialize)]
struct GradientReport {
    eps: f64,
    trials: usize,
    max_defect: f64,
}

#[derive(Debug, Serialize)]
struct PassivityReport {
    certificate: TCertificate,
    certificate_valid: bool,
    lemma: Option<LemmaVerdict>,
    lmi_residual: Option<f64>,
    inertia: Option<[usize; 3]>,
}

struct Outcome {
    text: String,
    verdict: bool,
}

struct Ctx<'a> {
    tol: Option<f64>,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn seed(&mut self, seed: Option<u64>) -> u64 {
        seed.unwrap_or_else(|| {
            let _ = writeln!(self.err, "note: no --seed given, using seed {DEFAULT_SEED}");
            DEFAULT_SEED
        })
    }
}

fn report<T: Serialize>(
    command: &str,
    label: Option<String>,
    tol: f64,
    seed: Option<u64>,
    verdict: bool,
    result: T,
) -> Result<Outcome> {
    let text = io::report_to_string(&Envelope {
        command,
        label,
        tol,
        seed,
        verdict,
        result,
    })?;
    Ok(Outcome { text, verdict })
}

/// Runs the CLI with the tolerance default taken from `$RELAXKIT_TOL`.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    run_with_env(args, std::env::var(TOL_ENV).ok(), out, err)
}

/// Like [`run`] with the environment tolerance passed explicitly.
pub fn run_with_env<I, S>(args: I, env_tol: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_TRUE };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let env_tol = match env_tol.map(|s| s.trim().parse::<f64>().map_err(|_| s)) {
        None => None,
        Some(Ok(v)) if v > 0.0 && v.is_finite() => Some(v),
        Some(Ok(v)) => {
            let _ = writeln!(err, "error: {TOL_ENV} must be positive, got {v}");
            return EXIT_USAGE;
        }
        Some(Err(s)) => {
            let _ = writeln!(err, "error: {TOL_ENV} is not a number: `{s}`");
            return EXIT_USAGE;
        }
    };
    if let Some(t) = cli.tol {
        if !(t > 0.0) || !t.is_finite() {
            let _ = writeln!(err, "error: --tol must be positive, got {t}");
            return EXIT_USAGE;
        }
    }
    let mut ctx = Ctx {
        tol: cli.tol.or(env_tol),
        err,
    };
    let outcome = match dispatch(cli.command, &mut ctx) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            return exit_code(&e);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => out.write_all(outcome.text.as_bytes()).map_err(Error::from),
    };
    if let Err(e) = written {
        let _ = writeln!(ctx.err, "error: {e}");
        return EXIT_USAGE;
    }
    if outcome.verdict {
        EXIT_TRUE
    } else {
        EXIT_FALSE
    }
}

fn load(path: &Path) -> Result<(StateSpaceModel, Option<String>)> {
    io::load_model(path)
}

fn dispatch(command: Command, ctx: &mut Ctx) -> Result<Outcome> {
    match command {
        Command::Classify { model } => {
            let (sys, label) = load(&model)?;
            let tol = ctx.tol(classify::DEFAULT_TOL);
            let rep: ClassificationReport = classify::classify(&sys, &ClassifyConfig::with_tol(tol))?;
            report("classify", label, tol, None, rep.overall, rep)
        }
        Command::Realize { model } => {
            let (sys, label) = load(&model)?;
            let tol = ctx.tol(classify::DEFAULT_TOL);
            let rep = classify::classify(&sys, &ClassifyConfig::with_tol(tol))?;
            if !rep.overall {
                let _ = writeln!(ctx.err, "not a relaxation system; no symmetric realization emitted");
                return report("realize", label, tol, None, false, rep);
            }
            let modal = classify::modal_decomposition(&sys, tol)?;
            let real = classify::symmetric_realization(&modal, tol)?;
            let label = Some(match label {
                Some(l) => format!("{l} (symmetric realization)"),
                None => "symmetric realization".to_string(),
            });
            Ok(Outcome {
                text: io::model_to_string(&real, label.as_deref())?,
                verdict: true,
            })
        }
        Command::Hankel {
            model,
            panels,
            nodes,
            certify,
            trials,
            seed,
            samples,
        } => {
            let (sys, label) = load(&model)?;
            let tol = ctx.tol(classify::DEFAULT_TOL);
            let seed = ctx.seed(seed);
            let grid = hankel::build_grid(&sys, panels, nodes)?;
            let hd = hankel::discretize_hankel(&sys, &grid)?;
            let positivity = hankel::positivity_certificate(&hd);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut adjointness_defect = 0.0f64;
            for _ in 0..4 {
                let u = gen::random_exp_poly(rng.random(), hd.channels(), 3).sample(&grid)?;
                let w = gen::random_exp_poly(rng.random(), hd.channels(), 3).sample(&grid)?;
                adjointness_defect = adjointness_defect.max(hankel::adjointness_defect(&hd, &u, &w)?);
            }
            let numerical_range = hankel::numerical_range_arg(&hd, samples, seed)?;
            let cycles = match certify {
                Some(n) => hankel::n_cyclic_test(&hd, n, trials, seed)?,
                None => Vec::new(),
            };
            let certified = positivity.certified(tol);
            let verdict = certified && cycles.iter().all(|c| c.passes(tol));
            let result = HankelReport {
                grid: GridSummary {
                    panels: grid.panels(),
                    nodes_per_panel: grid.nodes_per_panel(),
                    horizon: grid.horizon(),
                    self_test_error: grid.self_test_error(),
                },
                positivity,
                certified,
                adjointness_defect,
                numerical_range,
                cycles,
            };
            report("hankel", label, tol, Some(seed), verdict, result)
        }
        Command::StorageTrace {
            model,
            signal,
            dt,
            burn_in,
            panels,
            nodes,
        } => {
            let (sys, label) = load(&model)?;
            let sig = io::load_signal(&signal)?;
            let tol = ctx.tol(1e-6);
            let dt = match dt.or_else(|| sig.uniform_step()) {
                Some(dt) if dt > 0.0 && dt.is_finite() => dt,
                Some(dt) => return Err(Error::domain(format!("dt must be positive, got {dt}"))),
                None => {
                    return Err(Error::validation(
                        "times",
                        "samples are not uniformly spaced; pass --dt",
                    ))
                }
            };
            if sig.channels() != sys.inputs() {
                return Err(Error::validation(
                    "channels",
                    format!("signal has {} channels, model has {} inputs", sig.channels(), sys.inputs()),
                ));
            }
            let grid = hankel::build_grid(&sys, panels, nodes)?;
            let hd = hankel::discretize_hankel(&sys, &grid)?;
            let burn_in = burn_in.unwrap_or_else(|| storage::default_burn_in(&hd));
            let trace = storage::storage_trace(&sys, &hd, &sig.values, dt, Some(burn_in))?;
            let max_abs_supply = trace.max_abs_supply();
            let max_residual = if trace.residuals.is_empty() { 0.0 } else { trace.max_residual() };
            let threshold = tol * (1.0 + max_abs_supply);
            let result = StorageReport {
                dt,
                burn_in,
                samples: trace.times.len(),
                max_residual,
                max_abs_supply,
                threshold,
                trace,
            };
            report("storage-trace", label, tol, None, max_residual <= threshold, result)
        }
        Command::GradientCheck {
            model,
            eps,
            trials,
            seed,
        } => {
            let (sys, label) = load(&model)?;
            let tol = ctx.tol(1e-9);
            let seed = ctx.seed(seed);
            let grid = hankel::build_grid(&sys, hankel::DEFAULT_PANELS, hankel::DEFAULT_NODES_PER_PANEL)?;
            let hd = hankel::discretize_hankel(&sys, &grid)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut max_defect = 0.0f64;
            for _ in 0..trials {
                let u = gen::random_exp_poly(rng.random(), hd.channels(), 3).sample(&grid)?;
                let phi = gen::random_exp_poly(rng.random(), hd.channels(), 3).sample(&grid)?;
                max_defect = max_defect.max(storage::gradient_check(&hd, &u, &[phi], eps)?);
            }
            let result = GradientReport {
                eps,
                trials,
                max_defect,
            };
            report("gradient-check", label, tol, Some(seed), max_defect <= tol, result)
        }
        Command::Passivity { model } => {
            let (sys, label) = load(&model)?;
            let tol = ctx.tol(classify::DEFAULT_TOL);
            let certificate = passivity::solve_t(&sys, tol)?;
            let certificate_valid = certificate.residuals_ok(tol);
            let (lemma, lmi_residual, inertia) = if certificate_valid {
                let lemma = passivity::lemma_passivity_check(&sys, &certificate, tol)?;
                let lmi = passivity::lmi_residual(&sys, &certificate.t, tol)?;
                let (p, n, z) = passivity::signature_inertia(&certificate, tol);
                (Some(lemma), Some(lmi), Some([p, n, z]))
            } else {
                let _ = writeln!(ctx.err, "no T matrix satisfies the certificate equations within tolerance");
                (None, None, None)
            };
            let verdict = lemma.is_some_and(|l| l.verdict);
            let result = PassivityReport {
                certificate,
                certificate_valid,
                lemma,
                lmi_residual,
                inertia,
            };
            report("passivity", label, tol, None, verdict, result)
        }
        Command::Generate { family } => {
            let (sys, label) = match family {
                Family::Relaxation {
                    seed,
                    modes,
                    inputs,
                    rank,
                    feedthrough,
                } => {
                    let seed = ctx.seed(seed);
                    let sys = gen::random_relaxation(seed, modes, inputs, rank, feedthrough)?;
                    let d = if feedthrough { " with feedthrough" } else { "" };
                    (sys, format!("relaxation seed={seed} modes={modes} inputs={inputs} rank={rank}{d}"))
                }
                Family::Nonrelaxation { seed, kind } => {
                    let seed = ctx.seed(seed);
                    let kind = NonRelaxationKind::from(kind);
                    let name = serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                    (gen::random_nonrelaxation(seed, kind), format!("nonrelaxation seed={seed} kind={name}"))
                }
                Family::Rc { r1, cap, r2 } => (gen::rc_two_port(r1, cap, r2)?, format!("rc two-port R1={r1} Cap={cap} R2={r2}")),
            };
            Ok(Outcome {
                text: io::model_to_string(&sys, Some(&label))?,
                verdict: true,
            })
        }
    }
}
