//! Quadrature discretization of the Hankel operator
//! `(Γu)(t) = ∫₀^∞ g(t + τ) u(τ) dτ`, `g(t) = C e^{At} B`, and numerical
//! certificates of self-adjointness, positivity, cyclic monotonicity and
//! numerical-range angle.
//!
//! Inputs are expressed in reversed time: `u(τ)` is the input applied `τ`
//! time units before the present. The feedthrough `D` never enters the
//! kernel.
//!
//! The weighted operator matrix is `M = W^{1/2} K W^{1/2}` with `K` the
//! flattened kernel blocks, so that self-adjointness of `Γ` on the grid is
//! symmetry of `M`. `M` has rank at most `2n`; eigenvalue and numerical-range
//! certificates work on its compression `S = QᵀMQ` onto an orthonormal basis
//! `Q` of the span of the kernel factors, which carries the whole nonzero
//! spectrum.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{matrix_exponential, StateSpaceModel};

/// Tail mass `e^{−aT}` dropped by truncating at the horizon `T`.
pub const TRUNCATION_EPS: f64 = 1e-10;
pub const DEFAULT_PANELS: usize = 32;
pub const DEFAULT_NODES_PER_PANEL: usize = 8;

/// Quadrature values below `ORIGIN_REL · ‖M‖ · ‖z‖²` in modulus are treated as
/// the origin by [`numerical_range_arg`].
pub const ORIGIN_REL: f64 = 1e-9;

/// Composite Gauss–Legendre rule on `[0, T]` with geometrically graded panels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    boundaries: Vec<f64>,
    horizon: f64,
    decay: f64,
    nodes_per_panel: usize,
    self_test_error: f64,
}

impl QuadratureGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Panel boundaries `0 = b₀ < … < b_P = T`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn panels(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Decay rate `a = |spectral abscissa|` the horizon was sized for.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// `|a · Σ wᵢ e^{−a tᵢ} − 1|`, recorded at construction.
    pub fn self_test_error(&self) -> f64 {
        self.self_test_error
    }

    /// Builds the grid from explicit panel boundaries.
    pub fn from_boundaries(boundaries: Vec<f64>, nodes_per_panel: usize, decay: f64) -> Result<Self> {
        if boundaries.len() < 2 || nodes_per_panel == 0 {
            return Err(Error::domain("need at least one panel and one node per panel"));
        }
        if boundaries[0] != 0.0 || boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("panel boundaries must start at 0 and increase strictly"));
        }
        if !(decay > 0.0) || !decay.is_finite() {
            return Err(Error::domain(format!("decay rate must be positive, got {decay}")));
        }
        let (ref_nodes, ref_weights) = gauss_legendre(nodes_per_panel);
        let mut nodes = Vec::with_capacity((boundaries.len() - 1) * nodes_per_panel);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for w in boundaries.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            for (x, wt) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(mid + half * x);
                weights.push(half * wt);
            }
        }
        let integral: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(t, w)| w * (-decay * t).exp())
            .sum();
        let horizon = *boundaries.last().unwrap();
        Ok(Self {
            nodes,
            weights,
            boundaries,
            horizon,
            decay,
            nodes_per_panel,
            self_test_error: (decay * integral - 1.0).abs(),
        })
    }
}

/// Nodes (ascending) and weights of the `order`-point Gauss–Legendre rule on
/// `[−1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut z = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(order, z);
            let step = p / dp;
            z -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(order, z);
        nodes[i] = -z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (nodes, weights)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Horizon `T = ln(1/ε)/|abscissa|` split into `n_panels` geometric panels,
/// the first about `0.5/ρ(A)` wide, each carrying `nodes_per_panel`
/// Gauss–Legendre nodes.
pub fn build_grid(
    sys: &StateSpaceModel,
    n_panels: usize,
    nodes_per_panel: usize,
) -> Result<Arc<QuadratureGrid>> {
    build_grid_resolving(sys, n_panels, nodes_per_panel, 0.0)
}

/// [`build_grid`] with the first panel also short enough to resolve signals
/// decaying at `signal_rate`: its width is `0.5/max(ρ(A), signal_rate)`.
pub fn build_grid_resolving(
    sys: &StateSpaceModel,
    n_panels: usize,
    nodes_per_panel: usize,
    signal_rate: f64,
) -> Result<Arc<QuadratureGrid>> {
    if n_panels == 0 || nodes_per_panel == 0 {
        return Err(Error::domain("panel and node counts must be at least 1"));
    }
    if !(signal_rate >= 0.0) || !signal_rate.is_finite() {
        return Err(Error::domain(format!("signal rate must be finite and nonnegative, got {signal_rate}")));
    }
    let (decay, radius) = if sys.states() == 0 {
        (1.0, 1.0)
    } else {
        let stab = sys.is_stable()?;
        if !stab.stable {
            return Err(Error::UnstableForHankel {
                abscissa: stab.spectral_abscissa,
            });
        }
        let radius = sys.eigenvalues()?.iter().map(|z| z.norm()).fold(0.0, f64::max);
        (-stab.spectral_abscissa, radius)
    };
    let horizon = (1.0 / TRUNCATION_EPS).ln() / decay;
    let first = 0.5 / radius.max(signal_rate);
    let p = n_panels as i32;
    let boundaries: Vec<f64> = if first >= horizon / n_panels as f64 {
        (0..=n_panels).map(|k| horizon * k as f64 / n_panels as f64).collect()
    } else {
        let width = |q: f64| horizon * (q - 1.0) / (q.powi(p) - 1.0);
        let mut lo = 1.0;
        let mut hi = 2.0;
        while width(hi) > first {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if width(mid) > first {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = 0.5 * (lo + hi);
        let denom = q.powi(p) - 1.0;
        let mut b: Vec<f64> = (0..=n_panels)
            .map(|k| horizon * (q.powi(k as i32) - 1.0) / denom)
            .collect();
        b[n_panels] = horizon;
        b
    };
    QuadratureGrid::from_boundaries(boundaries, nodes_per_panel, decay).map(Arc::new)
}

fn same_grid(a: &Arc<QuadratureGrid>, b: &Arc<QuadratureGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Multichannel signal sampled on the nodes of a [`QuadratureGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: Arc<QuadratureGrid>,
    /// Row `i` is the value at node `tᵢ`.
    values: DMatrix<f64>,
}

impl SampledSignal {
    pub fn new(grid: Arc<QuadratureGrid>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != grid.len() {
            return Err(Error::domain(format!(
                "signal has {} rows but the grid has {} nodes",
                values.nrows(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("signal values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<QuadratureGrid>, channels: usize) -> Self {
        let values = DMatrix::zeros(grid.len(), channels);
        Self { grid, values }
    }

    /// Samples `f(t)` at every node.
    pub fn from_fn(
        grid: Arc<QuadratureGrid>,
        channels: usize,
        mut f: impl FnMut(f64) -> DVector<f64>,
    ) -> Result<Self> {
        let mut values = DMatrix::zeros(grid.len(), channels);
        for (i, &t) in grid.nodes().iter().enumerate() {
            let v = f(t);
            if v.len() != channels {
                return Err(Error::domain(format!(
                    "sample function returned {} channels, expected {channels}",
                    v.len()
                )));
            }
            values.row_mut(i).copy_from(&v.transpose());
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::domain("signals live on different quadrature grids"));
        }
        if self.channels() != other.channels() {
            return Err(Error::domain(format!(
                "channel mismatch: {} vs {}",
                self.channels(),
                other.channels()
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: &self.values * a + &other.values * b,
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: &self.values * a,
        }
    }

    pub fn norm_squared(&self) -> f64 {
        l2_inner(self, self).expect("a signal is compatible with itself")
    }

    /// Weight-symmetrized coordinates `W^{1/2} u`, flattened node-major.
    pub fn to_weighted(&self) -> DVector<f64> {
        let m = self.channels();
        DVector::from_fn(self.values.len(), |k, _| {
            let (i, c) = (k / m, k % m);
            self.grid.weights[i].sqrt() * self.values[(i, c)]
        })
    }

    /// Inverse of [`SampledSignal::to_weighted`].
    pub fn from_weighted(grid: Arc<QuadratureGrid>, channels: usize, xi: &DVector<f64>) -> Result<Self> {
        if xi.len() != grid.len() * channels {
            return Err(Error::domain("weighted vector has the wrong length"));
        }
        let values = DMatrix::from_fn(grid.len(), channels, |i, c| {
            xi[i * channels + c] / grid.weights[i].sqrt()
        });
        Self::new(grid, values)
    }
}

/// `⟨u, y⟩ ≈ Σᵢ wᵢ u(tᵢ)ᵀ y(tᵢ)`.
pub fn l2_inner(u: &SampledSignal, y: &SampledSignal) -> Result<f64> {
    u.check_compatible(y)?;
    let mut total = 0.0;
    for (i, w) in u.grid.weights.iter().enumerate() {
        let mut row = 0.0;
        for c in 0..u.channels() {
            row += u.values[(i, c)] * y.values[(i, c)];
        }
        total += w * row;
    }
    Ok(total)
}

/// Hankel operator of a square stable system sampled on a quadrature grid.
#[derive(Debug, Clone)]
pub struct HankelDiscretization {
    grid: Arc<QuadratureGrid>,
    channels: usize,
    /// `C e^{A tᵢ}` per node.
    left: Vec<DMatrix<f64>>,
    /// `e^{A tⱼ} B` per node.
    right: Vec<DMatrix<f64>>,
    matrix: DMatrix<f64>,
    basis: DMatrix<f64>,
    compressed: DMatrix<f64>,
    norm: f64,
    symmetry_defect: f64,
}

/// Assembles kernel blocks `g(tᵢ + tⱼ) = (C e^{A tᵢ})(e^{A tⱼ} B)` and the
/// weighted matrix `M`.
pub fn discretize_hankel(sys: &StateSpaceModel, grid: &Arc<QuadratureGrid>) -> Result<HankelDiscretization> {
    sys.require_square("discretize_hankel")?;
    if sys.states() > 0 {
        let stab = sys.is_stable()?;
        if !stab.stable {
            return Err(Error::UnstableForHankel {
                abscissa: stab.spectral_abscissa,
            });
        }
    }
    let n = sys.states();
    let m = sys.inputs();
    let big = grid.len() * m;
    let mut left = Vec::with_capacity(grid.len());
    let mut right = Vec::with_capacity(grid.len());
    let mut f = DMatrix::zeros(big, n);
    let mut gt = DMatrix::zeros(big, n);
    for (i, (&t, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
        let e = matrix_exponential(&(sys.a() * t))?;
        let l = sys.c() * &e;
        let r = &e * sys.b();
        let sw = w.sqrt();
        f.view_mut((i * m, 0), (m, n)).copy_from(&(&l * sw));
        gt.view_mut((i * m, 0), (m, n)).copy_from(&(r.transpose() * sw));
        left.push(l);
        right.push(r);
    }
    let matrix = &f * gt.transpose();

    let (basis, compressed) = if n == 0 || big == 0 {
        (DMatrix::zeros(big, 0), DMatrix::zeros(0, 0))
    } else {
        let mut u = DMatrix::zeros(big, 2 * n);
        u.view_mut((0, 0), (big, n)).copy_from(&f);
        u.view_mut((0, n), (big, n)).copy_from(&gt);
        let q = u.qr().q();
        let s = (q.transpose() * &f) * (gt.transpose() * &q);
        (q, s)
    };
    let norm = linalg::spectral_norm(&compressed);
    let frob = matrix.norm();
    let symmetry_defect = if frob == 0.0 {
        0.0
    } else {
        (&matrix - matrix.transpose()).norm() / frob
    };
    Ok(HankelDiscretization {
        grid: grid.clone(),
        channels: m,
        left,
        right,
        matrix,
        basis,
        compressed,
        norm,
        symmetry_defect,
    })
}

impl HankelDiscretization {
    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `K[i][j] = g(tᵢ + tⱼ)`.
    pub fn kernel_block(&self, i: usize, j: usize) -> DMatrix<f64> {
        &self.left[i] * &self.right[j]
    }

    /// `M = W^{1/2} K W^{1/2}`, rows and columns ordered node-major.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Spectral norm of `M`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `‖M − Mᵀ‖_F / ‖M‖_F`, zero when `M = 0`.
    pub fn symmetry_defect(&self) -> f64 {
        self.symmetry_defect
    }

    fn signal_from_weighted(&self, xi: &DVector<f64>) -> SampledSignal {
        SampledSignal::from_weighted(self.grid.clone(), self.channels, xi)
            .expect("weighted vector matches the discretization")
    }

    /// Orthonormal basis vectors of the span carrying `M`'s nonzero spectrum,
    /// lifted from coefficient vectors of the compression.
    fn lift(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.basis * a
    }
}

/// `y(tᵢ) = Σⱼ wⱼ K[i][j] u(tⱼ)`, evaluated through the kernel factors.
pub fn apply_hankel(hd: &HankelDiscretization, u: &SampledSignal) -> Result<SampledSignal> {
    if !same_grid(&hd.grid, &u.grid) {
        return Err(Error::domain("signal grid differs from the discretization grid"));
    }
    if u.channels() != hd.channels {
        return Err(Error::domain(format!(
            "signal has {} channels, operator expects {}",
            u.channels(),
            hd.channels
        )));
    }
    let n = hd.right.first().map_or(0, |r| r.nrows());
    let mut z = DVector::zeros(n);
    for (j, r) in hd.right.iter().enumerate() {
        z += r * u.values.row(j).transpose() * hd.grid.weights[j];
    }
    let mut values = DMatrix::zeros(hd.grid.len(), hd.channels);
    for (i, l) in hd.left.iter().enumerate() {
        values.row_mut(i).copy_from(&(l * &z).transpose());
    }
    Ok(SampledSignal {
        grid: hd.grid.clone(),
        values,
    })
}

/// `|⟨Γw, u⟩ − ⟨w, Γu⟩| / (1 + |⟨w, Γu⟩|)`.
pub fn adjointness_defect(hd: &HankelDiscretization, u: &SampledSignal, w: &SampledSignal) -> Result<f64> {
    let gw = apply_hankel(hd, w)?;
    let gu = apply_hankel(hd, u)?;
    let lhs = l2_inner(&gw, u)?;
    let rhs = l2_inner(w, &gu)?;
    Ok((lhs - rhs).abs() / (1.0 + rhs.abs()))
}

/// Eigenvalue certificate for the weighted operator matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityCertificate {
    /// Smallest eigenvalue of `(M + Mᵀ)/2`.
    pub min_eig: f64,
    /// `‖M − Mᵀ‖_F / ‖M‖_F`.
    pub symmetry_defect: f64,
    /// `‖M‖₂`.
    pub norm: f64,
}

impl PositivityCertificate {
    /// Self-adjoint and positive within `tol`, the eigenvalue bound taken
    /// relative to `‖M‖`.
    pub fn certified(&self, tol: f64) -> bool {
        self.min_eig >= -tol * self.norm && self.symmetry_defect <= tol
    }
}

pub fn positivity_certificate(hd: &HankelDiscretization) -> PositivityCertificate {
    let k = hd.compressed.nrows();
    let mut min_eig = linalg::min_sym_eig(&hd.compressed);
    if hd.matrix.nrows() > k {
        // M vanishes on the complement of the basis
        min_eig = min_eig.min(0.0);
    }
    if !min_eig.is_finite() {
        min_eig = 0.0;
    }
    PositivityCertificate {
        min_eig,
        symmetry_defect: hd.symmetry_defect,
        norm: hd.norm,
    }
}

/// `Σᵢ ⟨yᵢ, uᵢ − uᵢ₊₁⟩` with `yᵢ = Γuᵢ` and indices taken cyclically.
pub fn cycle_sum(hd: &HankelDiscretization, signals: &[SampledSignal]) -> Result<f64> {
    if signals.len() < 2 {
        return Err(Error::domain("a cycle needs at least two signals"));
    }
    let mut total = 0.0;
    for (i, u) in signals.iter().enumerate() {
        let next = &signals[(i + 1) % signals.len()];
        let y = apply_hankel(hd, u)?;
        total += l2_inner(&y, &u.combine(1.0, next, -1.0)?)?;
    }
    Ok(total)
}

/// Worst cycle found for one cycle order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleReport {
    /// Cycle order; an `n`-cycle visits `n + 1` signals.
    pub n: usize,
    pub worst_sum: f64,
    /// `‖M‖ Σ ‖uₖ‖²` of the worst cycle.
    pub scale: f64,
    /// `worst_sum / scale` (zero when the scale vanishes).
    pub normalized: f64,
    pub cycles_tested: usize,
}

impl CycleReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.normalized >= -tol
    }
}

struct Directions {
    /// Eigenvectors of the symmetric part of `M`, ascending eigenvalue.
    symmetric: Vec<DVector<f64>>,
    /// Real and imaginary parts of eigenvectors of the Hermitian matrix
    /// `i(M − Mᵀ)/2`, largest modulus first.
    skew: Vec<(DVector<f64>, DVector<f64>)>,
}

fn structured_directions(hd: &HankelDiscretization, limit: usize) -> Directions {
    let k = hd.compressed.nrows();
    if k == 0 {
        return Directions {
            symmetric: Vec::new(),
            skew: Vec::new(),
        };
    }
    let (_, vecs) = linalg::sym_eigen(&hd.compressed);
    let symmetric = vecs
        .column_iter()
        .take(limit)
        .map(|c| hd.lift(&c.into_owned()))
        .collect();

    let skew = (&hd.compressed - hd.compressed.transpose()) * 0.5;
    let herm = skew.map(|v| Complex::new(0.0, v));
    let eig = nalgebra::SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let skew = order
        .iter()
        .take(limit)
        .map(|&j| {
            let col = eig.eigenvectors.column(j);
            let re = DVector::from_iterator(k, col.iter().map(|z| z.re));
            let im = DVector::from_iterator(k, col.iter().map(|z| z.im));
            (hd.lift(&re), hd.lift(&im))
        })
        .collect();
    Directions { symmetric, skew }
}

fn random_weighted(hd: &HankelDiscretization, rng: &mut ChaCha8Rng, in_range: bool) -> DVector<f64> {
    let k = hd.basis.ncols();
    if in_range && k > 0 {
        let a = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        hd.lift(&a)
    } else {
        DVector::from_fn(hd.matrix.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal))
    }
}

/// Searches for violated `n`-cyclic monotonicity inequalities, `n = 1..=n_max`.
///
/// Each order is probed with `trials` seeded random cycles (half drawn from
/// the range of `M`), shuffled orderings of one random cycle, sign-flip
/// cycles along eigenvectors of the symmetric part, rotations through
/// eigenvector planes of the skew part in both orientations, and cyclic
/// channel permutations.
pub fn n_cyclic_test(hd: &HankelDiscretization, n_max: usize, trials: usize, seed: u64) -> Result<Vec<CycleReport>> {
    if n_max < 1 || trials < 1 {
        return Err(Error::domain("n_max and trials must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs = structured_directions(hd, 2);
    let m = hd.channels;
    let mut reports = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let points = n + 1;
        let mut cycles: Vec<Vec<DVector<f64>>> = Vec::new();
        for t in 0..trials {
            let in_range = t % 2 == 0;
            cycles.push((0..points).map(|_| random_weighted(hd, &mut rng, in_range)).collect());
        }
        let base: Vec<DVector<f64>> = (0..points).map(|_| random_weighted(hd, &mut rng, true)).collect();
        for _ in 0..(trials / 4).max(1) {
            let mut perm = base.clone();
            perm.shuffle(&mut rng);
            cycles.push(perm);
        }
        for v in &dirs.symmetric {
            cycles.push((0..points).map(|k| if k % 2 == 0 { v.clone() } else { -v }).collect());
        }
        for (x, y) in &dirs.skew {
            for orientation in [1.0, -1.0] {
                let theta = orientation * 2.0 * PI / points as f64;
                cycles.push(
                    (0..points)
                        .map(|k| x * (theta * k as f64).cos() + y * (theta * k as f64).sin())
                        .collect(),
                );
            }
        }
        if m > 1 {
            for v in &dirs.symmetric {
                cycles.push(
                    (0..points)
                        .map(|k| {
                            DVector::from_fn(v.len(), |idx, _| {
                                let (i, c) = (idx / m, idx % m);
                                v[i * m + (c + k) % m]
                            })
                        })
                        .collect(),
                );
            }
        }

        let mut worst: Option<CycleReport> = None;
        for cycle in &cycles {
            let signals: Vec<SampledSignal> = cycle.iter().map(|xi| hd.signal_from_weighted(xi)).collect();
            let sum = cycle_sum(hd, &signals)?;
            let scale = hd.norm * cycle.iter().map(|xi| xi.norm_squared()).sum::<f64>();
            let normalized = if scale > 0.0 { sum / scale } else { 0.0 };
            if worst.is_none_or(|w| normalized < w.normalized) {
                worst = Some(CycleReport {
                    n,
                    worst_sum: sum,
                    scale,
                    normalized,
                    cycles_tested: cycles.len(),
                });
            }
        }
        reports.push(worst.expect("at least one cycle per order"));
    }
    Ok(reports)
}

/// Empirical angular extent of the numerical range of `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericalRange {
    /// `max |arg(z*Mz)|` over the evaluated samples, in radians.
    pub max_abs_arg: f64,
    /// Samples whose quadratic form was not numerically zero.
    pub evaluated: usize,
    /// No sample left the origin; `max_abs_arg` is reported as 0.
    pub vacuous: bool,
}

/// Samples `arg(z*Mz)` over `samples` seeded complex vectors in the range of
/// `M` together with eigenvectors of its Hermitian and skew parts and their
/// complex combinations.
pub fn numerical_range_arg(hd: &HankelDiscretization, samples: usize, seed: u64) -> Result<NumericalRange> {
    if samples < 1 {
        return Err(Error::domain("samples must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    for _ in 0..samples {
        let x = random_weighted(hd, &mut rng, true);
        let y = random_weighted(hd, &mut rng, true);
        candidates.push((x, y));
    }
    let dirs = structured_directions(hd, 4);
    let zero = DVector::zeros(hd.matrix.ncols());
    for v in &dirs.symmetric {
        candidates.push((v.clone(), zero.clone()));
        for w in &dirs.symmetric {
            candidates.push((v.clone(), w.clone()));
        }
    }
    for (x, y) in &dirs.skew {
        candidates.push((x.clone(), y.clone()));
        for v in &dirs.symmetric {
            candidates.push((x + v, y.clone()));
        }
    }

    let mut max_abs_arg = 0.0f64;
    let mut evaluated = 0;
    for (x, y) in &candidates {
        let mx = &hd.matrix * x;
        let my = &hd.matrix * y;
        let re = x.dot(&mx) + y.dot(&my);
        let im = x.dot(&my) - y.dot(&mx);
        let size = x.norm_squared() + y.norm_squared();
        if re.hypot(im) <= ORIGIN_REL * hd.norm * size || size == 0.0 {
            continue;
        }
        evaluated += 1;
        max_abs_arg = max_abs_arg.max(im.atan2(re).abs());
    }
    Ok(NumericalRange {
        max_abs_arg,
        evaluated,
        vacuous: evaluated == 0,
    })
}
