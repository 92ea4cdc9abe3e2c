//! Relaxation-system tests.
//!
//! A square system is a relaxation system when `D = Dᵀ ⪰ 0` and
//! `g(t) = C e^{At} B` is completely monotone. Four equivalent finite tests are
//! implemented here, plus external reciprocity:
//!
//! * a sampled complete-monotonicity scan of `(−1)^k g⁽ᵏ⁾(t)`;
//! * the modal form `H(s) = G₀ + Σ Gᵢ/(s + λᵢ)` with symmetric PSD residues;
//! * an internally symmetric realization `A₁ = A₁ᵀ ⪯ 0`, `B₁ = C₁ᵀ`;
//! * the two block-Hankel matrices of Markov parameters, the first PSD and
//!   the shifted one NSD.
//!
//! PSD margins are normalized by `1 + max |entry|` of the matrix under test.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{StateSpaceModel, STABILITY_EPS};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Partial-fraction form `G₀ + Σᵢ Gᵢ / (s + λᵢ)` over distinct `λᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalForm {
    pub g0: DMatrix<f64>,
    /// Strictly increasing.
    pub rates: Vec<f64>,
    pub residues: Vec<DMatrix<f64>>,
    pub margins: ModalMargins,
}

/// Symmetry and definiteness margins of a [`ModalForm`], each normalized by
/// `1 + max |entry|` of the matrix it was measured on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModalMargins {
    pub residue_min_eig: f64,
    pub residue_asymmetry: f64,
    pub g0_min_eig: f64,
    pub g0_asymmetry: f64,
    pub min_rate: f64,
}

impl ModalForm {
    pub fn new(g0: DMatrix<f64>, rates: Vec<f64>, residues: Vec<DMatrix<f64>>) -> Result<Self> {
        if !g0.is_square() {
            return Err(Error::domain("G0 must be square"));
        }
        if rates.len() != residues.len() {
            return Err(Error::domain("rates and residues must align"));
        }
        if rates.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("rates must be strictly increasing"));
        }
        let m = g0.nrows();
        if residues.iter().any(|g| g.shape() != (m, m)) {
            return Err(Error::domain(format!("every residue must be {m}x{m}")));
        }
        let margins = ModalMargins::measure(&g0, &rates, &residues);
        Ok(Self {
            g0,
            rates,
            residues,
            margins,
        })
    }

    /// Whether the form has the shape of a relaxation system within `tol`.
    pub fn is_relaxation(&self, tol: f64) -> bool {
        let mg = &self.margins;
        mg.residue_min_eig >= -tol
            && mg.residue_asymmetry <= tol
            && mg.g0_min_eig >= -tol
            && mg.g0_asymmetry <= tol
            && mg.min_rate >= -tol
    }

    pub fn transfer_eval(&self, s: Complex<f64>) -> DMatrix<Complex<f64>> {
        let mut h = self.g0.map(|v| Complex::new(v, 0.0));
        for (rate, g) in self.rates.iter().zip(&self.residues) {
            let f = Complex::new(1.0, 0.0) / (s + rate);
            h += g.map(|v| Complex::new(v, 0.0) * f);
        }
        h
    }
}

fn normalized_scale(m: &DMatrix<f64>) -> f64 {
    1.0 + linalg::max_abs(m)
}

impl ModalMargins {
    fn measure(g0: &DMatrix<f64>, rates: &[f64], residues: &[DMatrix<f64>]) -> Self {
        let mut residue_min_eig = 0.0f64;
        let mut residue_asymmetry = 0.0f64;
        for g in residues {
            let scale = normalized_scale(g);
            residue_min_eig = residue_min_eig.min(linalg::min_sym_eig(g) / scale);
            residue_asymmetry = residue_asymmetry.max(linalg::asymmetry(g) / scale);
        }
        let g0_scale = normalized_scale(g0);
        Self {
            residue_min_eig,
            residue_asymmetry,
            g0_min_eig: (linalg::min_sym_eig(g0) / g0_scale).min(0.0),
            g0_asymmetry: linalg::asymmetry(g0) / g0_scale,
            min_rate: rates.first().copied().unwrap_or(0.0).min(0.0),
        }
    }
}

/// Outcome of the Markov–Hankel test.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovHankelResult {
    pub verdict: bool,
    /// `λ_min(H₀) / (1 + max|H₀|)`; must be `≥ −tol`.
    pub margin_even: f64,
    /// `−λ_max(H₁) / (1 + max|H₁|)`; must be `≥ −tol`.
    pub margin_odd: f64,
    /// Largest normalized asymmetry among `D`, `H₀` and `H₁`.
    pub symmetry_defect: f64,
    /// `λ_min(D) / (1 + max|D|)`.
    pub feedthrough_margin: f64,
    pub hankel_even: DMatrix<f64>,
    pub hankel_odd: DMatrix<f64>,
}

/// Block-Hankel test on `[CA^{i+j}B]` and `[CA^{i+j+1}B]`, `i, j < n`.
pub fn markov_hankel_test(sys: &StateSpaceModel, tol: f64) -> Result<MarkovHankelResult> {
    sys.require_square("markov_hankel_test")?;
    let n = sys.states();
    let m = sys.inputs();
    let d = sys.d();
    let d_scale = normalized_scale(d);
    let feedthrough_margin = (linalg::min_sym_eig(d) / d_scale).min(0.0);
    let d_asym = linalg::asymmetry(d) / d_scale;

    let (h0, h1) = if n == 0 {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
    } else {
        let markov = sys.markov_parameters(2 * n)?;
        let mut h0 = DMatrix::zeros(n * m, n * m);
        let mut h1 = DMatrix::zeros(n * m, n * m);
        for i in 0..n {
            for j in 0..n {
                h0.view_mut((i * m, j * m), (m, m)).copy_from(&markov[i + j]);
                h1.view_mut((i * m, j * m), (m, m)).copy_from(&markov[i + j + 1]);
            }
        }
        (h0, h1)
    };
    let s0 = normalized_scale(&h0);
    let s1 = normalized_scale(&h1);
    let margin_even = if n == 0 { 0.0 } else { linalg::min_sym_eig(&h0) / s0 };
    let margin_odd = if n == 0 { 0.0 } else { -linalg::max_sym_eig(&h1) / s1 };
    let symmetry_defect = d_asym
        .max(linalg::asymmetry(&h0) / s0)
        .max(linalg::asymmetry(&h1) / s1);
    let verdict = margin_even >= -tol
        && margin_odd >= -tol
        && symmetry_defect <= tol
        && feedthrough_margin >= -tol;
    Ok(MarkovHankelResult {
        verdict,
        margin_even,
        margin_odd,
        symmetry_defect,
        feedthrough_margin,
        hankel_even: h0,
        hankel_odd: h1,
    })
}

/// Real diagonal modal form of `sys`.
///
/// Eigenvalues closer than `tol·(1 + |λ|)` are merged and their residues
/// pooled. Complex or defective eigenstructure yields [`Error::NotModal`].
pub fn modal_decomposition(sys: &StateSpaceModel, tol: f64) -> Result<ModalForm> {
    sys.require_square("modal_decomposition")?;
    let n = sys.states();
    if n == 0 {
        return ModalForm::new(sys.d().clone(), Vec::new(), Vec::new());
    }
    let a = sys.a();
    let mut eigs: Vec<f64> = Vec::with_capacity(n);
    for z in sys.eigenvalues()? {
        if z.im.abs() > tol * (1.0 + z.norm()) {
            return Err(Error::NotModal(format!(
                "complex eigenvalue {:.6e}{:+.6e}i",
                z.re, z.im
            )));
        }
        eigs.push(z.re);
    }
    eigs.sort_by(|x, y| y.total_cmp(x));

    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for &lam in &eigs {
        match clusters.last_mut() {
            Some(c) if (c[c.len() - 1] - lam).abs() <= tol * (1.0 + lam.abs()) => c.push(lam),
            _ => clusters.push(vec![lam]),
        }
    }

    let a_norm = linalg::spectral_norm(a);
    let threshold = 10.0 * tol * (1.0 + a_norm);
    let mut centers = Vec::with_capacity(clusters.len());
    let mut blocks: Vec<DMatrix<f64>> = Vec::with_capacity(clusters.len());
    for c in &clusters {
        let center = c.iter().sum::<f64>() / c.len() as f64;
        let shifted = a - DMatrix::<f64>::identity(n, n) * center;
        let basis = linalg::null_space(&shifted, threshold);
        if basis.ncols() != c.len() {
            return Err(Error::NotModal(format!(
                "eigenvalue {:.6e} has algebraic multiplicity {} but {} independent eigenvectors",
                center,
                c.len(),
                basis.ncols()
            )));
        }
        centers.push(center);
        blocks.push(basis);
    }
    let columns: Vec<DVector<f64>> = blocks
        .iter()
        .flat_map(|b| b.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
        .collect();
    let v = DMatrix::from_columns(&columns);
    let sv = linalg::singular_values(&v);
    let rcond = sv.min() / sv.max();
    if !(rcond > tol.sqrt()) {
        return Err(Error::NotModal(format!(
            "eigenvector matrix is numerically singular (rcond {rcond:.3e}); A is defective"
        )));
    }
    let w = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotModal("eigenvector matrix is singular".into()))?;

    let cv = sys.c() * &v;
    let wb = &w * sys.b();
    let mut rates = Vec::with_capacity(centers.len());
    let mut residues = Vec::with_capacity(centers.len());
    let mut offset = 0;
    for (center, block) in centers.iter().zip(&blocks) {
        let k = block.ncols();
        let g = cv.columns(offset, k) * wb.rows(offset, k);
        offset += k;
        // −0.0 would print oddly and compare equal anyway
        rates.push(-center + 0.0);
        residues.push(g);
    }
    ModalForm::new(sys.d().clone(), rates, residues)
}

/// Internally symmetric realization `(−diag(λ), Lᵀ, L, G₀)` of a modal form
/// whose residues factor as `Gᵢ = LᵢLᵢᵀ`.
///
/// Residue eigenvalues below `tol·(1 + max|Gᵢ|)` are dropped, so the returned
/// state dimension is the sum of the numerical residue ranks.
pub fn symmetric_realization(modal: &ModalForm, tol: f64) -> Result<StateSpaceModel> {
    let m = modal.g0.nrows();
    let mut diag = Vec::new();
    let mut factors: Vec<DVector<f64>> = Vec::new();
    for (i, (&rate, g)) in modal.rates.iter().zip(&modal.residues).enumerate() {
        let scale = normalized_scale(g);
        if rate < -tol * (1.0 + rate.abs()) {
            return Err(Error::domain(format!(
                "mode {i} has negative rate {rate:.6e}; no stable symmetric realization"
            )));
        }
        if linalg::asymmetry(g) > tol * scale {
            return Err(Error::domain(format!(
                "residue {i} is not symmetric (defect {:.3e})",
                linalg::asymmetry(g)
            )));
        }
        let (vals, vecs) = linalg::sym_eigen(g);
        for (k, &mu) in vals.iter().enumerate() {
            if mu < -tol * scale {
                return Err(Error::domain(format!(
                    "residue {i} is not positive semidefinite: eigenvalue {mu:.6e}"
                )));
            }
            if mu > tol * scale {
                factors.push(vecs.column(k) * mu.sqrt());
                diag.push(-rate.max(0.0));
            }
        }
    }
    let n = diag.len();
    let a = DMatrix::from_diagonal(&DVector::from_vec(diag));
    let c = if n == 0 {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&factors)
    };
    let b = c.transpose();
    StateSpaceModel::new(a, b, c, modal.g0.clone())
}

/// Outcome of the sampled complete-monotonicity scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanResult {
    pub verdict: bool,
    /// Smallest `λ_min((−1)^k C A^k e^{At} B)` over the grid, normalized per
    /// derivative order by `1 + max |entry|`.
    pub worst_margin: f64,
    /// `(k, t)` where the worst margin occurs.
    pub worst_location: (usize, f64),
    pub symmetry_defect: f64,
}

/// Checks `g(t) = g(t)ᵀ` and `(−1)^k g⁽ᵏ⁾(t) ⪰ 0` for `k = 0..=k_max` on
/// `t_grid`. Derivatives are formed exactly as `C A^k e^{At} B`.
pub fn complete_monotonicity_scan(
    sys: &StateSpaceModel,
    t_grid: &[f64],
    k_max: usize,
    tol: f64,
) -> Result<ScanResult> {
    sys.require_square("complete_monotonicity_scan")?;
    if k_max < 1 {
        return Err(Error::domain("k_max must be at least 1"));
    }
    if t_grid.is_empty() {
        return Err(Error::domain("empty time grid"));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::domain(format!("time grid must be finite and nonnegative, found {t}")));
    }
    let mut c_pows = Vec::with_capacity(k_max + 1);
    let mut ca = sys.c().clone();
    for _ in 0..=k_max {
        c_pows.push(ca.clone());
        ca *= sys.a();
    }

    // (k, t, min_eig, asymmetry) and per-k scale
    let mut samples = Vec::with_capacity(t_grid.len() * (k_max + 1));
    let mut scales = vec![1.0f64; k_max + 1];
    for &t in t_grid {
        let eb = crate::model::matrix_exponential(&(sys.a() * t))? * sys.b();
        for (k, cak) in c_pows.iter().enumerate() {
            let mut mk = cak * &eb;
            if k % 2 == 1 {
                mk.neg_mut();
            }
            scales[k] = scales[k].max(1.0 + linalg::max_abs(&mk));
            samples.push((k, t, linalg::min_sym_eig(&mk), linalg::asymmetry(&mk)));
        }
    }
    let mut worst_margin = f64::INFINITY;
    let mut worst_location = (0, t_grid[0]);
    let mut symmetry_defect = 0.0f64;
    for &(k, t, min_eig, asym) in &samples {
        let margin = min_eig / scales[k];
        if margin < worst_margin {
            worst_margin = margin;
            worst_location = (k, t);
        }
        symmetry_defect = symmetry_defect.max(asym / scales[k]);
    }
    if !worst_margin.is_finite() {
        worst_margin = 0.0;
    }
    Ok(ScanResult {
        verdict: worst_margin >= -tol && symmetry_defect <= tol,
        worst_margin,
        worst_location,
        symmetry_defect,
    })
}

/// Time grid for [`complete_monotonicity_scan`] spanning the time constants
/// of `A`: zero followed by 400 geometrically spaced points from
/// `10⁻³/max|λ|` to `20/min|λ|`.
pub fn default_scan_grid(sys: &StateSpaceModel) -> Vec<f64> {
    let mags: Vec<f64> = sys
        .eigenvalues()
        .unwrap_or_default()
        .iter()
        .map(|z| z.norm())
        .filter(|r| *r > 1e-12)
        .collect();
    if mags.is_empty() {
        return (0..=50).map(|k| k as f64 * 0.2).collect();
    }
    let r_max = mags.iter().copied().fold(0.0, f64::max);
    let r_min = mags.iter().copied().fold(f64::INFINITY, f64::min);
    let lo = 1e-3 / r_max;
    let hi = 20.0 / r_min;
    let count = 400;
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    std::iter::once(0.0)
        .chain((0..count).map(|i| lo * ratio.powi(i)))
        .collect()
}

/// Outcome of [`reciprocity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReciprocityResult {
    pub verdict: bool,
    /// `max ‖Σₑ H(s) − (Σₑ H(s))ᵀ‖₂` over the sample points.
    pub max_defect: f64,
}

/// External reciprocity `Σₑ H(s) = (Σₑ H(s))ᵀ` sampled at `points`.
pub fn reciprocity_check(
    sys: &StateSpaceModel,
    sigma_e: &[f64],
    points: &[Complex<f64>],
    tol: f64,
) -> Result<ReciprocityResult> {
    sys.require_square("reciprocity_check")?;
    let m = sys.inputs();
    if sigma_e.len() != m || sigma_e.iter().any(|s| *s != 1.0 && *s != -1.0) {
        return Err(Error::domain(format!(
            "signature must have {m} entries, each +1 or -1"
        )));
    }
    let sig = DMatrix::from_diagonal(&DVector::from_iterator(
        m,
        sigma_e.iter().map(|s| Complex::new(*s, 0.0)),
    ));
    let mut verdict = true;
    let mut max_defect = 0.0f64;
    for &s in points {
        let h = sys.transfer_eval(s)?;
        let sh = &sig * &h;
        let diff = &sh - sh.transpose();
        let defect = diff.singular_values().max();
        let h_norm = h.singular_values().max();
        if defect > tol * (1.0 + h_norm) {
            verdict = false;
        }
        max_defect = max_defect.max(defect);
    }
    Ok(ReciprocityResult {
        verdict,
        max_defect,
    })
}

/// Per-test status inside a [`ClassificationReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestOutcome {
    pub status: Status,
    /// Signed margin; nonnegative means satisfied. Absent when the test could
    /// not run.
    pub margin: Option<f64>,
    pub detail: String,
}

impl TestOutcome {
    fn from_verdict(ok: bool, margin: f64, detail: String) -> Self {
        Self {
            status: if ok { Status::Pass } else { Status::Fail },
            margin: Some(margin),
            detail,
        }
    }

    fn failed(detail: String) -> Self {
        Self {
            status: Status::Fail,
            margin: None,
            detail,
        }
    }

    fn not_applicable(detail: String) -> Self {
        Self {
            status: Status::NotApplicable,
            margin: None,
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Knobs for [`classify`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    pub tol: f64,
    pub k_max: usize,
    /// `None` selects [`default_scan_grid`].
    pub scan_grid: Option<Vec<f64>>,
    pub reciprocity_points: Vec<Complex<f64>>,
    /// Relative transfer mismatch allowed between a system and its
    /// symmetric realization.
    pub realization_rel_tol: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            k_max: 4,
            scan_grid: None,
            reciprocity_points: vec![
                Complex::new(1.0, 0.0),
                Complex::new(2.0, 1.0),
                Complex::new(0.5, 3.0),
            ],
            realization_rel_tol: 1e-6,
        }
    }
}

impl ClassifyConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportTolerances {
    pub tol: f64,
    pub k_max: usize,
    pub scan_points: usize,
    pub reciprocity_points: Vec<[f64; 2]>,
    pub realization_rel_tol: f64,
}

/// Merged verdicts of every relaxation test on one system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub states: usize,
    pub inputs: usize,
    pub complete_monotonicity: TestOutcome,
    pub modal: TestOutcome,
    pub symmetric_realization: TestOutcome,
    pub markov_hankel: TestOutcome,
    pub reciprocity: TestOutcome,
    pub overall: bool,
    pub marginally_stable: bool,
    pub notes: Vec<String>,
    pub tolerances: ReportTolerances,
}

impl ClassificationReport {
    /// The four equivalent relaxation tests, in a fixed order.
    pub fn relaxation_tests(&self) -> [(&'static str, &TestOutcome); 4] {
        [
            ("complete_monotonicity", &self.complete_monotonicity),
            ("modal", &self.modal),
            ("symmetric_realization", &self.symmetric_realization),
            ("markov_hankel", &self.markov_hankel),
        ]
    }
}

fn symmetric_realization_outcome(
    sys: &StateSpaceModel,
    modal: &ModalForm,
    config: &ClassifyConfig,
) -> TestOutcome {
    let real = match symmetric_realization(modal, config.tol) {
        Ok(r) => r,
        Err(e) => return TestOutcome::failed(e.to_string()),
    };
    let a1 = real.a();
    let structural = a1 == &a1.transpose() && real.b() == &real.c().transpose();
    let a_max = if real.states() == 0 { 0.0 } else { linalg::max_sym_eig(a1) };
    let mut mismatch = 0.0f64;
    for &s in &config.reciprocity_points {
        match (sys.transfer_eval(s), real.transfer_eval(s)) {
            (Ok(h), Ok(h1)) => {
                let scale = 1.0 + h.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let diff = (h - h1).iter().map(|z| z.norm()).fold(0.0, f64::max);
                mismatch = mismatch.max(diff / scale);
            }
            (Err(e), _) | (_, Err(e)) => return TestOutcome::failed(e.to_string()),
        }
    }
    let ok = structural && a_max <= 0.0 && mismatch <= config.realization_rel_tol;
    TestOutcome::from_verdict(
        ok,
        config.realization_rel_tol - mismatch,
        format!(
            "order {}, lambda_max(A1) = {:.6e}, relative transfer mismatch {:.3e}",
            real.states(),
            a_max,
            mismatch
        ),
    )
}

/// Runs every relaxation test; sub-test failures are recorded, never raised.
pub fn classify(sys: &StateSpaceModel, config: &ClassifyConfig) -> Result<ClassificationReport> {
    sys.require_square("classify")?;
    let tol = config.tol;
    let mut notes = Vec::new();

    let eigs = sys.eigenvalues()?;
    let marginally_stable = eigs.iter().any(|z| z.re.abs() <= STABILITY_EPS);
    if marginally_stable {
        notes.push("marginally stable: Hankel analysis unavailable".to_string());
    }

    let grid = config
        .scan_grid
        .clone()
        .unwrap_or_else(|| default_scan_grid(sys));
    let complete_monotonicity = match complete_monotonicity_scan(sys, &grid, config.k_max, tol) {
        Ok(r) => TestOutcome::from_verdict(
            r.verdict,
            r.worst_margin.min(-r.symmetry_defect + tol),
            format!(
                "worst normalized eigenvalue {:.6e} at k = {}, t = {:.6e}; symmetry defect {:.3e}",
                r.worst_margin, r.worst_location.0, r.worst_location.1, r.symmetry_defect
            ),
        ),
        Err(e) => TestOutcome::failed(e.to_string()),
    };

    let (modal, symmetric) = match modal_decomposition(sys, tol) {
        Ok(form) => {
            let mg = form.margins;
            let margin = mg
                .residue_min_eig
                .min(mg.g0_min_eig)
                .min(mg.min_rate)
                .min(tol - mg.residue_asymmetry.max(mg.g0_asymmetry));
            let rates: Vec<String> = form.rates.iter().map(|r| format!("{r:.6e}")).collect();
            let modal = TestOutcome::from_verdict(
                form.is_relaxation(tol),
                margin,
                format!(
                    "rates [{}]; residue min eig {:.6e}, residue asymmetry {:.3e}, G0 min eig {:.6e}",
                    rates.join(", "),
                    mg.residue_min_eig,
                    mg.residue_asymmetry,
                    mg.g0_min_eig
                ),
            );
            (modal, symmetric_realization_outcome(sys, &form, config))
        }
        Err(Error::NotModal(reason)) => (
            TestOutcome::not_applicable(format!("not modal: {reason}")),
            TestOutcome::not_applicable(format!("not modal: {reason}")),
        ),
        Err(e) => (TestOutcome::failed(e.to_string()), TestOutcome::failed(e.to_string())),
    };

    let markov_hankel = match markov_hankel_test(sys, tol) {
        Ok(r) => TestOutcome::from_verdict(
            r.verdict,
            r.margin_even
                .min(r.margin_odd)
                .min(r.feedthrough_margin)
                .min(tol - r.symmetry_defect),
            format!(
                "even margin {:.6e}, odd margin {:.6e}, feedthrough margin {:.6e}, symmetry defect {:.3e}",
                r.margin_even, r.margin_odd, r.feedthrough_margin, r.symmetry_defect
            ),
        ),
        Err(e) => TestOutcome::failed(e.to_string()),
    };

    let identity = vec![1.0; sys.inputs()];
    let reciprocity = match reciprocity_check(sys, &identity, &config.reciprocity_points, tol) {
        Ok(r) => TestOutcome::from_verdict(
            r.verdict,
            -r.max_defect,
            format!("max defect {:.3e} with identity signature", r.max_defect),
        ),
        Err(e) => TestOutcome::failed(e.to_string()),
    };

    let overall = [
        &complete_monotonicity,
        &modal,
        &symmetric,
        &markov_hankel,
        &reciprocity,
    ]
    .iter()
    .all(|t| t.passed());

    Ok(ClassificationReport {
        states: sys.states(),
        inputs: sys.inputs(),
        complete_monotonicity,
        modal,
        symmetric_realization: symmetric,
        markov_hankel,
        reciprocity,
        overall,
        marginally_stable,
        notes,
        tolerances: ReportTolerances {
            tol,
            k_max: config.k_max,
            scan_points: grid.len(),
            reciprocity_points: config.reciprocity_points.iter().map(|z| [z.re, z.im]).collect(),
            realization_rel_tol: config.realization_rel_tol,
        },
    })
}
