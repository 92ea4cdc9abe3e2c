//! Seeded system generators, negative-control families, and a closed-form
//! oracle for Hankel inner products of exponential-polynomial signals.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::classify::{symmetric_realization, ModalForm};
use crate::error::{Error, Result};
use crate::hankel::{QuadratureGrid, SampledSignal};
use crate::linalg;
use crate::model::StateSpaceModel;

/// Minimum ratio between consecutive rates drawn by [`random_relaxation`].
const RATE_GAP: f64 = 1.01;

/// Fastest decay drawn by [`random_exp_poly`].
pub const EXP_POLY_MAX_DECAY: f64 = 3.0;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn rotation(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

/// Impedance of the two-port RC circuit: a capacitor `Cap` with `R1` in
/// parallel, shared by both ports, and `R2` in series with port 2.
pub fn rc_two_port(r1: f64, cap: f64, r2: f64) -> Result<StateSpaceModel> {
    for (name, v) in [("R1", r1), ("Cap", cap), ("R2", r2)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    StateSpaceModel::from_rows(
        1, 2, 2,
        &[-1.0 / (r1 * cap)],
        &[1.0 / cap, 1.0 / cap],
        &[1.0, 1.0],
        &[0.0, 0.0, 0.0, r2],
    )
}

/// Relaxation system in internally symmetric coordinates.
///
/// `n_modes` distinct rates are drawn log-uniformly from `[0.1, 10]` with
/// consecutive ratios at least 1.01; each residue is `LᵢLᵢᵀ` with `Lᵢ` an
/// `m × rᵢ` Gaussian matrix, `rᵢ` uniform in `1..=rank_max`. With
/// `include_d` the feedthrough is `D̃D̃ᵀ` for a Gaussian `D̃`.
pub fn random_relaxation(
    seed: u64,
    n_modes: usize,
    m: usize,
    rank_max: usize,
    include_d: bool,
) -> Result<StateSpaceModel> {
    if n_modes < 1 || m < 1 || rank_max < 1 || rank_max > m {
        return Err(Error::domain(format!(
            "need n_modes >= 1 and 1 <= rank_max <= m, got n_modes = {n_modes}, m = {m}, rank_max = {rank_max}"
        )));
    }
    if (100f64).ln() / RATE_GAP.ln() < n_modes as f64 {
        return Err(Error::domain(format!("cannot fit {n_modes} separated rates in [0.1, 10]")));
    }
    let mut rng = rng_for(seed);
    let mut rates: Vec<f64> = Vec::with_capacity(n_modes);
    while rates.len() < n_modes {
        let r = 10f64.powf(rng.random_range(-1.0..=1.0));
        if rates.iter().all(|q| (r / q).ln().abs() >= RATE_GAP.ln()) {
            rates.push(r);
        }
    }
    rates.sort_by(f64::total_cmp);
    let residues: Vec<DMatrix<f64>> = rates
        .iter()
        .map(|_| {
            let rank = rng.random_range(1..=rank_max);
            let l = normal_matrix(&mut rng, m, rank);
            &l * l.transpose()
        })
        .collect();
    let d = if include_d {
        let dt = normal_matrix(&mut rng, m, m);
        linalg::symmetric_part(&(&dt * dt.transpose()))
    } else {
        DMatrix::zeros(m, m)
    };
    let modal = ModalForm::new(d, rates, residues)?;
    symmetric_realization(&modal, 1e-12)
}

/// Invertible `S = U diag(σ) Vᵀ` with orthogonal `U`, `V` and singular
/// values log-uniform in `[0.5, 2]`, so `cond(S) ≤ 4`.
pub fn random_similarity(seed: u64, n: usize) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let mut rng = rng_for(seed);
    let u = normal_matrix(&mut rng, n, n).qr().q();
    let v = normal_matrix(&mut rng, n, n).qr().q();
    let sigma = DVector::from_fn(n, |_, _| 2f64.powf(rng.random_range(-1.0..=1.0)));
    u * DMatrix::from_diagonal(&sigma) * v.transpose()
}

/// `sys` in the coordinates of [`random_similarity`].
pub fn scrambled(sys: &StateSpaceModel, seed: u64) -> Result<StateSpaceModel> {
    sys.transformed(&random_similarity(seed, sys.states()))
}

/// Negative-control families, one per way the relaxation property can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NonRelaxationKind {
    /// Damped oscillation: complex eigenvalues, no real modal form.
    ComplexPole,
    /// Real modes with symmetric residues, one of them indefinite.
    IndefiniteResidue,
    /// Nonsymmetric impulse response (gyrator-like coupling).
    Asymmetric,
}

impl NonRelaxationKind {
    pub const ALL: [NonRelaxationKind; 3] = [
        NonRelaxationKind::ComplexPole,
        NonRelaxationKind::IndefiniteResidue,
        NonRelaxationKind::Asymmetric,
    ];
}

pub fn random_nonrelaxation(seed: u64, kind: NonRelaxationKind) -> StateSpaceModel {
    let mut rng = rng_for(seed);
    let model = match kind {
        NonRelaxationKind::ComplexPole => {
            let sigma = rng.random_range(0.2..=1.0);
            let omega = rng.random_range(0.5..=2.0);
            StateSpaceModel::from_rows(2, 1, 1, &[-sigma, omega, -omega, -sigma], &[1.0, 0.0], &[1.0, 0.0], &[0.0])
        }
        NonRelaxationKind::IndefiniteResidue => {
            let slow = rng.random_range(0.3..=0.7);
            let fast = rng.random_range(1.5..=3.0);
            if rng.random_bool(0.5) {
                let a = rng.random_range(0.5..=1.5f64);
                let d = rng.random_range(0.5..=1.5f64);
                StateSpaceModel::from_rows(
                    2, 1, 1,
                    &[-slow, 0.0, 0.0, -fast],
                    &[a.sqrt(), -d.sqrt()],
                    &[a.sqrt(), d.sqrt()],
                    &[0.0],
                )
            } else {
                let r1 = rotation(rng.random_range(0.0..std::f64::consts::TAU));
                let r2 = rotation(rng.random_range(0.0..std::f64::consts::TAU));
                let pos = DVector::from_fn(2, |_, _| rng.random_range(0.5..=1.5f64).sqrt());
                let mix = DVector::from_fn(2, |_, _| rng.random_range(0.5..=1.5f64).sqrt());
                let c1 = r1 * DMatrix::from_diagonal(&pos);
                let c2 = r2 * DMatrix::from_diagonal(&mix);
                let b1 = c1.transpose();
                let b2 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])) * c2.transpose();
                let mut a = DMatrix::zeros(4, 4);
                a.view_mut((0, 0), (2, 2)).fill_diagonal(-slow);
                a.view_mut((2, 2), (2, 2)).fill_diagonal(-fast);
                let mut b = DMatrix::zeros(4, 2);
                b.view_mut((0, 0), (2, 2)).copy_from(&b1);
                b.view_mut((2, 0), (2, 2)).copy_from(&b2);
                let mut c = DMatrix::zeros(2, 4);
                c.view_mut((0, 0), (2, 2)).copy_from(&c1);
                c.view_mut((0, 2), (2, 2)).copy_from(&c2);
                StateSpaceModel::new(a, b, c, DMatrix::zeros(2, 2))
            }
        }
        NonRelaxationKind::Asymmetric => {
            let rate = rng.random_range(0.5..=2.0);
            let alpha = rng.random_range(0.1..=0.2);
            let beta = rng.random_range(0.8..=1.5);
            StateSpaceModel::from_rows(
                2, 2, 2,
                &[-rate, 0.0, 0.0, -rate],
                &[1.0, 0.0, 0.0, 1.0],
                &[alpha, -beta, beta, alpha],
                &[0.0; 4],
            )
        }
    };
    model.expect("generator dimensions are consistent")
}

/// One term `coef · τ^power · e^{−decay·τ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub coef: DVector<f64>,
    pub power: u32,
    pub decay: f64,
}

/// Finite sum of [`ExpTerm`]s, a closed-form element of `L₂(ℝ≥0, ℝᵐ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPoly {
    channels: usize,
    terms: Vec<ExpTerm>,
}

impl ExpPoly {
    pub fn new(channels: usize, terms: Vec<ExpTerm>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if t.coef.len() != channels {
                return Err(Error::domain(format!("term {i} has {} channels, expected {channels}", t.coef.len())));
            }
            if !(t.decay > 0.0) || !t.decay.is_finite() {
                return Err(Error::domain(format!(
                    "term {i} has decay {}; only decaying terms are square integrable",
                    t.decay
                )));
            }
        }
        Ok(Self { channels, terms })
    }

    pub fn zero(channels: usize) -> Self {
        Self {
            channels,
            terms: Vec::new(),
        }
    }

    /// Single channel-vector times `e^{−decay·τ}`.
    pub fn exponential(coef: DVector<f64>, decay: f64) -> Result<Self> {
        Self::new(coef.len(), vec![ExpTerm { coef, power: 0, decay }])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn eval(&self, tau: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.channels);
        for t in &self.terms {
            v += &t.coef * (tau.powi(t.power as i32) * (-t.decay * tau).exp());
        }
        v
    }

    pub fn sample(&self, grid: &Arc<QuadratureGrid>) -> Result<SampledSignal> {
        SampledSignal::from_fn(grid.clone(), self.channels, |t| self.eval(t))
    }
}

/// Random [`ExpPoly`] with `terms` terms, decays in `[0.5, 3]`, powers up to
/// 2 and Gaussian coefficients.
pub fn random_exp_poly(seed: u64, channels: usize, terms: usize) -> ExpPoly {
    let mut rng = rng_for(seed);
    let terms = (0..terms)
        .map(|_| ExpTerm {
            coef: DVector::from_fn(channels, |_, _| rng.sample::<f64, _>(StandardNormal)),
            power: rng.random_range(0..=2),
            decay: rng.random_range(0.5..=EXP_POLY_MAX_DECAY),
        })
        .collect();
    ExpPoly::new(channels, terms).expect("generated terms are valid")
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `∫₀^∞ τ^k e^{−aτ} e^{Aτ} dτ = k! (aI − A)^{−(k+1)}`.
fn moment(a_mat: &DMatrix<f64>, decay: f64, power: u32) -> Result<DMatrix<f64>> {
    let n = a_mat.nrows();
    let shifted = DMatrix::<f64>::identity(n, n) * decay - a_mat;
    let inv = shifted
        .try_inverse()
        .ok_or_else(|| Error::Numeric(format!("aI - A is singular for a = {decay}")))?;
    let mut out = inv.clone();
    for _ in 0..power {
        out = &out * &inv;
    }
    Ok(out * factorial(power))
}

/// `⟨u, Γv⟩ = (∫ u(t)ᵀ C e^{At} dt)(∫ e^{Aτ} B v(τ) dτ)`, integrated exactly
/// term by term. `D` does not contribute.
pub fn oracle_inner_product(sys: &StateSpaceModel, u: &ExpPoly, v: &ExpPoly) -> Result<f64> {
    sys.require_square("oracle_inner_product")?;
    if u.channels != sys.outputs() || v.channels != sys.inputs() {
        return Err(Error::domain(format!(
            "descriptors have {} and {} channels, system is {}x{}",
            u.channels,
            v.channels,
            sys.outputs(),
            sys.inputs()
        )));
    }
    let n = sys.states();
    if n == 0 {
        return Ok(0.0);
    }
    let abscissa = sys.eigenvalues()?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    for t in u.terms.iter().chain(&v.terms) {
        if t.decay <= abscissa {
            return Err(Error::domain(format!(
                "decay {} does not dominate the spectral abscissa {abscissa}",
                t.decay
            )));
        }
    }
    let mut left = DVector::zeros(n);
    for t in &u.terms {
        left += moment(sys.a(), t.decay, t.power)?.transpose() * (sys.c().transpose() * &t.coef);
    }
    let mut right = DVector::zeros(n);
    for t in &v.terms {
        right += moment(sys.a(), t.decay, t.power)? * (sys.b() * &t.coef);
    }
    Ok(left.dot(&right))
}

/// Smooth input ramping up from zero: each channel is
/// `(1 − e^{−t}) Σⱼ aⱼ sin(ωⱼ t + φⱼ)` with three Gaussian amplitudes scaled
/// by 1/2 and frequencies in `[0.1, 0.5]`.
pub fn smooth_input(seed: u64, channels: usize, len: usize, dt: f64) -> Vec<DVector<f64>> {
    let mut rng = rng_for(seed);
    let params: Vec<[(f64, f64, f64); 3]> = (0..channels)
        .map(|_| {
            [(); 3].map(|_| {
                (
                    0.5 * rng.sample::<f64, _>(StandardNormal),
                    rng.random_range(0.1..=0.5),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
        })
        .collect();
    (0..len)
        .map(|k| {
            let t = k as f64 * dt;
            let ramp = 1.0 - (-t).exp();
            DVector::from_fn(channels, |c, _| {
                ramp * params[c].iter().map(|(a, w, p)| a * (w * t + p).sin()).sum::<f64>()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify, markov_hankel_test, ClassifyConfig, Status};
    use approx::assert_relative_eq;

    #[test]
    fn rc_examples() {
        let sys = rc_two_port(1.0, 1.0, 1.0).unwrap();
        assert_eq!(sys.a(), &DMatrix::from_element(1, 1, -1.0));
        assert_eq!(sys.b(), &DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        assert_eq!(sys.c(), &DMatrix::from_row_slice(2, 1, &[1.0, 1.0]));
        assert_eq!(sys.d(), &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));
        let sys = rc_two_port(2.0, 0.5, 1.0).unwrap();
        assert_eq!(sys.a()[(0, 0)], -1.0);
        assert_eq!(sys.b(), &DMatrix::from_row_slice(1, 2, &[2.0, 2.0]));
        assert!(rc_two_port(0.0, 1.0, 1.0).is_err());
        assert!(rc_two_port(1.0, -1.0, 1.0).is_err());
        for (r1, cap, r2) in [(1.0, 1.0, 1.0), (3.0, 0.2, 0.5), (0.1, 10.0, 7.0)] {
            let rep = classify(&rc_two_port(r1, cap, r2).unwrap(), &ClassifyConfig::default()).unwrap();
            assert!(rep.overall, "{rep:#?}");
        }
    }

    #[test]
    fn random_relaxation_is_deterministic_and_structured() {
        let a = random_relaxation(42, 3, 2, 2, true).unwrap();
        let b = random_relaxation(42, 3, 2, 2, true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_relaxation(43, 3, 2, 2, true).unwrap());
        assert_eq!(a.a(), &a.a().transpose());
        assert_eq!(a.b(), &a.c().transpose());
        assert!(a.states() >= 3 && a.states() <= 6);
        let rates: Vec<f64> = a.a().diagonal().iter().map(|v| -v).collect();
        assert!(rates.iter().all(|r| (0.1..=10.0).contains(r)));
        assert!(random_relaxation(1, 0, 2, 1, false).is_err());
        assert!(random_relaxation(1, 2, 2, 3, false).is_err());
    }

    #[test]
    fn single_mode_degenerate_case() {
        let sys = random_relaxation(5, 1, 1, 1, false).unwrap();
        assert_eq!(sys.states(), 1);
        assert!(sys.a()[(0, 0)] < 0.0);
        assert_eq!(sys.b()[(0, 0)], sys.c()[(0, 0)]);
        assert_eq!(sys.d()[(0, 0)], 0.0);
    }

    #[test]
    fn similarity_is_well_conditioned() {
        let s = random_similarity(9, 5);
        let sv = linalg::singular_values(&s);
        assert!(sv.max() / sv.min() <= 4.0 + 1e-12);
        assert_eq!(random_similarity(9, 5), s);
    }

    #[test]
    fn negative_controls() {
        for seed in 0..10 {
            let cp = random_nonrelaxation(seed, NonRelaxationKind::ComplexPole);
            assert!(!markov_hankel_test(&cp, 1e-8).unwrap().verdict);
            let ir = random_nonrelaxation(seed, NonRelaxationKind::IndefiniteResidue);
            let rep = classify(&ir, &ClassifyConfig::default()).unwrap();
            assert_eq!(rep.modal.status, Status::Fail);
            assert_eq!(rep.reciprocity.status, Status::Pass);
            let asym = random_nonrelaxation(seed, NonRelaxationKind::Asymmetric);
            let g = asym.impulse_response_g(0.3).unwrap();
            assert!(linalg::asymmetry(&g) > 0.5);
        }
        assert_eq!(
            random_nonrelaxation(3, NonRelaxationKind::IndefiniteResidue),
            random_nonrelaxation(3, NonRelaxationKind::IndefiniteResidue)
        );
    }

    #[test]
    fn oracle_examples() {
        let sys = StateSpaceModel::from_rows(1, 1, 1, &[-1.0], &[1.0], &[1.0], &[0.0]).unwrap();
        let e = ExpPoly::exponential(DVector::from_element(1, 1.0), 1.0).unwrap();
        assert_relative_eq!(oracle_inner_product(&sys, &e, &e).unwrap(), 0.25, epsilon = 1e-15);
        assert_eq!(oracle_inner_product(&sys, &ExpPoly::zero(1), &e).unwrap(), 0.0);
        let te = ExpPoly::new(1, vec![ExpTerm { coef: DVector::from_element(1, 1.0), power: 1, decay: 1.0 }]).unwrap();
        assert_relative_eq!(oracle_inner_product(&sys, &e, &te).unwrap(), 0.125, epsilon = 1e-15);
        assert!(ExpPoly::exponential(DVector::from_element(1, 1.0), 0.0).is_err());
        assert!(oracle_inner_product(&sys, &ExpPoly::zero(2), &e).is_err());
    }

    #[test]
    fn smooth_input_starts_at_rest() {
        let u = smooth_input(1, 2, 100, 0.1);
        assert_eq!(u.len(), 100);
        assert!(u[0].iter().all(|v| *v == 0.0));
        assert_eq!(u, smooth_input(1, 2, 100, 0.1));
    }
}
