//! Continuous-time LTI state-space models.
//!
//! ```text
//! x'(t) = A x(t) + B u(t)
//! y(t)  = C x(t) + D u(t)
//! ```
//!
//! The impulse response without feedthrough is `g(t) = C e^{At} B`; the full
//! response adds `D δ(t)`. Every routine here is a pure function of its inputs.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Spectral abscissa threshold below which `A` counts as Hurwitz.
pub const STABILITY_EPS: f64 = 1e-9;

/// Default relative rank threshold for controllability/observability.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Matrices `(A, B, C, D)` of a state-space system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

/// Result of [`StateSpaceModel::is_stable`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    /// Largest real part among the eigenvalues of `A`; `-inf` when `n = 0`.
    pub spectral_abscissa: f64,
}

/// Result of [`StateSpaceModel::is_minimal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Minimality {
    pub controllable: bool,
    pub observable: bool,
}

impl Minimality {
    pub fn is_minimal(&self) -> bool {
        self.controllable && self.observable
    }
}

/// Sampled state trajectory with the inputs that produced it.
///
/// `outputs[k] = C states[k] + D inputs[k]` holds at every instant by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Input reconstruction between samples used by the exact discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hold {
    /// Piecewise-constant input, `u(t) = u_k` on `[t_k, t_{k+1})`.
    Zero,
    /// Piecewise-linear input through consecutive samples.
    First,
}

/// `e^M` by scaling and squaring with a diagonal Padé approximant.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::domain(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("matrix exponential of a non-finite matrix"));
    }
    if m.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    Ok(m.clone().exp())
}

/// `(Φ, Γ₀, Γ₁)` of one discrete step; `Γ₁` only for first-order hold.
type StepMaps = (DMatrix<f64>, DMatrix<f64>, Option<DMatrix<f64>>);

impl StateSpaceModel {
    /// Builds a model after checking that the four matrices conform and are
    /// finite. `n = 0` (pure feedthrough) is allowed.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::validation("A", format!("must be square, got {}x{}", n, a.ncols())));
        }
        let (p, m) = d.shape();
        if b.nrows() != n || b.ncols() != m {
            return Err(Error::validation(
                "B",
                format!("expected {}x{}, got {}x{}", n, m, b.nrows(), b.ncols()),
            ));
        }
        if c.nrows() != p || c.ncols() != n {
            return Err(Error::validation(
                "C",
                format!("expected {}x{}, got {}x{}", p, n, c.nrows(), c.ncols()),
            ));
        }
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(name, "entries must be finite"));
            }
        }
        if m == 0 || p == 0 {
            return Err(Error::validation("D", "input and output dimensions must be positive"));
        }
        Ok(Self { a, b, c, d })
    }

    /// Convenience constructor from row-major slices.
    pub fn from_rows(
        n: usize,
        m: usize,
        p: usize,
        a: &[f64],
        b: &[f64],
        c: &[f64],
        d: &[f64],
    ) -> Result<Self> {
        if a.len() != n * n || b.len() != n * m || c.len() != p * n || d.len() != p * m {
            return Err(Error::domain("row-major slices do not match the given dimensions"));
        }
        Self::new(
            DMatrix::from_row_slice(n, n, a),
            DMatrix::from_row_slice(n, m, b),
            DMatrix::from_row_slice(p, n, c),
            DMatrix::from_row_slice(p, m, d),
        )
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// State dimension `n`.
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension `m`.
    pub fn inputs(&self) -> usize {
        self.d.ncols()
    }

    /// Output dimension `p`.
    pub fn outputs(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.inputs() == self.outputs()
    }

    pub(crate) fn require_square(&self, what: &str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{} requires a square system, got m = {}, p = {}",
                what,
                self.inputs(),
                self.outputs()
            )))
        }
    }

    /// Same dynamics with a different feedthrough.
    pub fn with_feedthrough(&self, d: DMatrix<f64>) -> Result<Self> {
        Self::new(self.a.clone(), self.b.clone(), self.c.clone(), d)
    }

    /// Similarity transform `(S A S⁻¹, S B, C S⁻¹, D)`.
    pub fn transformed(&self, s: &DMatrix<f64>) -> Result<Self> {
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::domain("similarity transform is singular"))?;
        Self::new(
            s * &self.a * &s_inv,
            s * &self.b,
            &self.c * &s_inv,
            self.d.clone(),
        )
    }

    /// `g(t) = C e^{At} B`, the impulse response without the `D δ(t)` term.
    pub fn impulse_response_g(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain(format!("impulse response needs finite t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(&self.c * &self.b);
        }
        let e = matrix_exponential(&(&self.a * t))?;
        Ok(&self.c * e * &self.b)
    }

    /// Eigenvalues of `A` (unordered).
    pub fn eigenvalues(&self) -> Result<Vec<Complex<f64>>> {
        linalg::eigenvalues(&self.a)
    }

    /// Hurwitz test with the absolute threshold [`STABILITY_EPS`].
    pub fn is_stable(&self) -> Result<Stability> {
        let eigs = self.eigenvalues()?;
        if eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("eigenvalue computation produced non-finite values".into()));
        }
        let spectral_abscissa = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        Ok(Stability {
            stable: spectral_abscissa < -STABILITY_EPS,
            spectral_abscissa,
        })
    }

    /// Numerical controllability and observability via singular values of
    /// the Krylov matrices, with threshold `tol · σ_max`.
    pub fn is_minimal(&self, tol: f64) -> Result<Minimality> {
        if !(tol > 0.0) {
            return Err(Error::domain("rank tolerance must be positive"));
        }
        let n = self.states();
        if n == 0 {
            return Ok(Minimality {
                controllable: true,
                observable: true,
            });
        }
        let m = self.inputs();
        let p = self.outputs();
        let mut ctrb = DMatrix::zeros(n, n * m);
        let mut obsv = DMatrix::zeros(n * p, n);
        let mut ab = self.b.clone();
        let mut ca = self.c.clone();
        for k in 0..n {
            ctrb.view_mut((0, k * m), (n, m)).copy_from(&ab);
            obsv.view_mut((k * p, 0), (p, n)).copy_from(&ca);
            ab = &self.a * ab;
            ca *= &self.a;
        }
        Ok(Minimality {
            controllable: linalg::numerical_rank(&ctrb, tol) == n,
            observable: linalg::numerical_rank(&obsv, tol) == n,
        })
    }

    /// `H(s) = C (sI − A)⁻¹ B + D`.
    pub fn transfer_eval(&self, s: Complex<f64>) -> Result<DMatrix<Complex<f64>>> {
        let n = self.states();
        let d = self.d.map(|v| Complex::new(v, 0.0));
        if n == 0 {
            return Ok(d);
        }
        let a = self.a.map(|v| Complex::new(v, 0.0));
        let resolvent = DMatrix::<Complex<f64>>::identity(n, n) * s - a;
        let sv = resolvent.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let anorm = linalg::spectral_norm(&self.a);
        if smin <= 1e-12 * (1.0 + anorm).max(smax) {
            let pole = self
                .eigenvalues()
                .unwrap_or_default()
                .into_iter()
                .min_by(|x, y| (x - s).norm().total_cmp(&(y - s).norm()))
                .unwrap_or(s);
            return Err(Error::Pole {
                s_re: s.re,
                s_im: s.im,
                pole_re: pole.re,
                pole_im: pole.im,
            });
        }
        let b = self.b.map(|v| Complex::new(v, 0.0));
        let c = self.c.map(|v| Complex::new(v, 0.0));
        let x = resolvent
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Numeric("LU solve of sI - A failed".into()))?;
        Ok(c * x + d)
    }

    /// `[CB, CAB, …, CA^{count−1}B]`.
    pub fn markov_parameters(&self, count: usize) -> Result<Vec<DMatrix<f64>>> {
        if count == 0 {
            return Err(Error::domain("markov_parameters needs count >= 1"));
        }
        let mut out = Vec::with_capacity(count);
        let mut ab = self.b.clone();
        for _ in 0..count {
            out.push(&self.c * &ab);
            ab = &self.a * ab;
        }
        Ok(out)
    }

    /// Exact zero-order-hold simulation from `x0`.
    ///
    /// Sample `k` of the trajectory sits at `t = k·dt`; input `u_k` is held on
    /// `[t_k, t_{k+1})`.
    pub fn simulate_zoh(
        &self,
        input_samples: &[DVector<f64>],
        dt: f64,
        x0: &DVector<f64>,
    ) -> Result<Trajectory> {
        self.simulate(input_samples, dt, x0, Hold::Zero)
    }

    /// Exact simulation for piecewise-linear inputs (first-order hold).
    pub fn simulate_foh(
        &self,
        input_samples: &[DVector<f64>],
        dt: f64,
        x0: &DVector<f64>,
    ) -> Result<Trajectory> {
        self.simulate(input_samples, dt, x0, Hold::First)
    }

    pub fn simulate(
        &self,
        input_samples: &[DVector<f64>],
        dt: f64,
        x0: &DVector<f64>,
        hold: Hold,
    ) -> Result<Trajectory> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::domain(format!("time step must be positive, got {dt}")));
        }
        let n = self.states();
        let m = self.inputs();
        if x0.len() != n {
            return Err(Error::domain(format!("x0 has length {}, expected {}", x0.len(), n)));
        }
        if let Some((k, u)) = input_samples.iter().enumerate().find(|(_, u)| u.len() != m) {
            return Err(Error::domain(format!(
                "input sample {} has length {}, expected {}",
                k,
                u.len(),
                m
            )));
        }
        let (phi, gamma0, gamma1) = self.discretize(dt, hold)?;

        let len = input_samples.len();
        let mut traj = Trajectory {
            times: Vec::with_capacity(len),
            states: Vec::with_capacity(len),
            inputs: Vec::with_capacity(len),
            outputs: Vec::with_capacity(len),
        };
        let mut x = x0.clone();
        for (k, u) in input_samples.iter().enumerate() {
            traj.times.push(k as f64 * dt);
            traj.outputs.push(&self.c * &x + &self.d * u);
            traj.states.push(x.clone());
            traj.inputs.push(u.clone());
            if let Some(next) = input_samples.get(k + 1) {
                let mut x_next = &phi * &x + &gamma0 * u;
                if let Some(g1) = &gamma1 {
                    x_next += g1 * (next - u);
                }
                x = x_next;
            }
        }
        Ok(traj)
    }

    /// Transition matrix and input maps for one step of length `dt`, taken
    /// from the exponential of an augmented block matrix.
    fn discretize(
        &self,
        dt: f64,
        hold: Hold,
    ) -> Result<StepMaps> {
        let n = self.states();
        let m = self.inputs();
        let size = match hold {
            Hold::Zero => n + m,
            Hold::First => n + 2 * m,
        };
        let mut aug = DMatrix::zeros(size, size);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.a * dt));
        aug.view_mut((0, n), (n, m)).copy_from(&(&self.b * dt));
        if hold == Hold::First {
            aug.view_mut((n, n + m), (m, m))
                .copy_from(&(DMatrix::<f64>::identity(m, m) * dt));
        }
        let e = matrix_exponential(&aug)?;
        let phi = e.view((0, 0), (n, n)).into_owned();
        let gamma0 = e.view((0, n), (n, m)).into_owned();
        let gamma1 = match hold {
            Hold::Zero => None,
            Hold::First => Some(e.view((0, n + m), (n, m)).into_owned() / dt),
        };
        Ok((phi, gamma0, gamma1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn first_order() -> StateSpaceModel {
        StateSpaceModel::from_rows(1, 1, 1, &[-1.0], &[1.0], &[1.0], &[0.0]).unwrap()
    }

    fn oscillator() -> StateSpaceModel {
        StateSpaceModel::from_rows(2, 1, 1, &[0.0, 1.0, -2.0, -1.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0])
            .unwrap()
    }

    #[test]
    fn impulse_response_examples() {
        let sys = first_order();
        assert_eq!(sys.impulse_response_g(0.0).unwrap()[(0, 0)], 1.0);
        assert_relative_eq!(sys.impulse_response_g(1.0).unwrap()[(0, 0)], (-1.0f64).exp(), max_relative = 1e-14);
        assert!(matches!(sys.impulse_response_g(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn expm_examples() {
        let z = matrix_exponential(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(z, DMatrix::identity(3, 3));
        let d = matrix_exponential(&DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]))).unwrap();
        assert_relative_eq!(d[(0, 0)], (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(d[(1, 1)], (-2.0f64).exp(), max_relative = 1e-14);
        assert_eq!(d[(0, 1)], 0.0);
        let nil = matrix_exponential(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(nil, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), epsilon = 1e-15);
        let bad = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(matrix_exponential(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn expm_matches_series_for_moderate_norm() {
        // Taylor series in extended summation as an independent reference.
        let m = DMatrix::from_row_slice(3, 3, &[-2.0, 1.5, 0.3, 0.7, -4.0, 2.2, -1.1, 0.4, -3.0]);
        let mut term = DMatrix::<f64>::identity(3, 3);
        let mut sum = term.clone();
        for k in 1..200 {
            term = &term * &m / k as f64;
            sum += &term;
        }
        let e = matrix_exponential(&m).unwrap();
        assert!((&e - &sum).norm() / sum.norm() < 1e-12);
    }

    #[test]
    fn stability_examples() {
        let s = first_order().is_stable().unwrap();
        assert!(s.stable);
        assert_relative_eq!(s.spectral_abscissa, -1.0, epsilon = 1e-14);
        let s = oscillator().is_stable().unwrap();
        assert!(s.stable);
        assert_relative_eq!(s.spectral_abscissa, -0.5, epsilon = 1e-12);
        let integ = StateSpaceModel::from_rows(1, 1, 1, &[0.0], &[1.0], &[1.0], &[0.0]).unwrap();
        let s = integ.is_stable().unwrap();
        assert!(!s.stable);
        assert_eq!(s.spectral_abscissa, 0.0);
    }

    #[test]
    fn minimality_examples() {
        let m = first_order().is_minimal(DEFAULT_RANK_TOL).unwrap();
        assert!(m.controllable && m.observable);
        let sys = StateSpaceModel::from_rows(2, 1, 1, &[-1.0, 0.0, 0.0, -2.0], &[1.0, 0.0], &[1.0, 0.0], &[0.0]).unwrap();
        let m = sys.is_minimal(DEFAULT_RANK_TOL).unwrap();
        assert!(!m.controllable && !m.observable);
        let sys = StateSpaceModel::from_rows(2, 1, 1, &[-1.0, 0.0, 0.0, -2.0], &[1.0, 1.0], &[1.0, 1.0], &[0.0]).unwrap();
        assert!(sys.is_minimal(DEFAULT_RANK_TOL).unwrap().is_minimal());
        assert!(sys.is_minimal(0.0).is_err());
    }

    #[test]
    fn zoh_step_and_decay() {
        let sys = first_order();
        let u: Vec<_> = (0..20).map(|_| DVector::from_element(1, 1.0)).collect();
        let tr = sys.simulate_zoh(&u, 0.1, &DVector::zeros(1)).unwrap();
        for (k, x) in tr.states.iter().enumerate() {
            assert_relative_eq!(x[0], 1.0 - (-0.1 * k as f64).exp(), epsilon = 1e-14);
        }
        let u: Vec<_> = (0..20).map(|_| DVector::zeros(1)).collect();
        let tr = sys.simulate_zoh(&u, 0.1, &DVector::from_element(1, 1.0)).unwrap();
        for (k, x) in tr.states.iter().enumerate() {
            assert_relative_eq!(x[0], (-0.1 * k as f64).exp(), epsilon = 1e-14);
        }
        let tr = sys.simulate_zoh(&u, 0.1, &DVector::zeros(1)).unwrap();
        assert!(tr.states.iter().chain(tr.outputs.iter()).all(|v| v[0] == 0.0));
    }

    #[test]
    fn foh_ramp_matches_closed_form() {
        // u(t) = t, x' = -x + t  =>  x(t) = t - 1 + e^{-t}
        let sys = first_order();
        let dt = 0.05;
        let u: Vec<_> = (0..100).map(|k| DVector::from_element(1, k as f64 * dt)).collect();
        let tr = sys.simulate_foh(&u, dt, &DVector::zeros(1)).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.states) {
            assert_relative_eq!(x[0], t - 1.0 + (-t).exp(), epsilon = 1e-13);
        }
    }

    #[test]
    fn simulate_rejects_bad_arguments() {
        let sys = first_order();
        let u = vec![DVector::zeros(2)];
        assert!(sys.simulate_zoh(&u, 0.1, &DVector::zeros(1)).is_err());
        let u = vec![DVector::zeros(1)];
        assert!(sys.simulate_zoh(&u, 0.0, &DVector::zeros(1)).is_err());
        assert!(sys.simulate_zoh(&u, 0.1, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn transfer_examples() {
        let sys = first_order();
        assert_relative_eq!(sys.transfer_eval(Complex::new(0.0, 0.0)).unwrap()[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(sys.transfer_eval(Complex::new(1.0, 0.0)).unwrap()[(0, 0)].re, 0.5, epsilon = 1e-15);
        match sys.transfer_eval(Complex::new(-1.0, 0.0)) {
            Err(Error::Pole { pole_re, .. }) => assert_relative_eq!(pole_re, -1.0),
            other => panic!("expected pole error, got {other:?}"),
        }
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let ff = StateSpaceModel::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, 2), DMatrix::zeros(2, 0), d.clone()).unwrap();
        let h = ff.transfer_eval(Complex::new(0.3, 7.0)).unwrap();
        assert_eq!(h.map(|z| z.re), d);
    }

    #[test]
    fn markov_examples() {
        let mk = first_order().markov_parameters(3).unwrap();
        let v: Vec<f64> = mk.iter().map(|m| m[(0, 0)]).collect();
        assert_eq!(v, vec![1.0, -1.0, 1.0]);
        let mk = oscillator().markov_parameters(3).unwrap();
        let v: Vec<f64> = mk.iter().map(|m| m[(0, 0)]).collect();
        assert_eq!(v, vec![0.0, 1.0, -1.0]);
        assert!(first_order().markov_parameters(0).is_err());
    }

    #[test]
    fn constructor_validates_dimensions() {
        let err = StateSpaceModel::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 3),
            DMatrix::zeros(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "C"));
        let err = StateSpaceModel::new(
            DMatrix::zeros(2, 3),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "A"));
    }
}
