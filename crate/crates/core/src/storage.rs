//! Intrinsic storage `V(u) = ½⟨u, Γu⟩` of a past input, dissipation traces
//! along simulated trajectories, and the derivative system with impulse
//! response `−g′`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hankel::{apply_hankel, l2_inner, HankelDiscretization, QuadratureGrid, SampledSignal};
use crate::model::{StateSpaceModel, Trajectory};
use crate::passivity::solve_t;

/// Certificate tolerance used when attaching `½xᵀTx` to a trace.
const T_TOL: f64 = 1e-8;

/// `½⟨u, Γu⟩`.
pub fn storage_value(hd: &HankelDiscretization, u: &SampledSignal) -> Result<f64> {
    Ok(0.5 * l2_inner(u, &apply_hankel(hd, u)?)?)
}

/// Past input seen from time `t`, `u_t(τ) = ū(t − τ)`, sampled on `grid`.
///
/// The recorded input is interpolated linearly between samples and taken as
/// zero before the first recorded instant.
pub fn past_window(traj: &Trajectory, t: f64, grid: &Arc<QuadratureGrid>) -> Result<SampledSignal> {
    let (first, last) = match (traj.times.first(), traj.times.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::domain("empty trajectory")),
    };
    if !(t >= first) || t > last {
        return Err(Error::domain(format!(
            "t = {t} lies outside the recorded span [{first}, {last}]"
        )));
    }
    let m = traj.inputs[0].len();
    let mut values = DMatrix::zeros(grid.len(), m);
    for (i, &tau) in grid.nodes().iter().enumerate() {
        let s = t - tau;
        if s < first {
            continue;
        }
        let idx = traj.times.partition_point(|x| *x <= s);
        let j = idx - 1;
        if j + 1 >= traj.times.len() {
            values.row_mut(i).copy_from(&traj.inputs[j].transpose());
            continue;
        }
        let theta = (s - traj.times[j]) / (traj.times[j + 1] - traj.times[j]);
        let u = &traj.inputs[j] * (1.0 - theta) + &traj.inputs[j + 1] * theta;
        values.row_mut(i).copy_from(&u.transpose());
    }
    SampledSignal::new(grid.clone(), values)
}

/// Storage, supply and dissipation residuals along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StorageTrace {
    pub times: Vec<f64>,
    /// `V(u_{t_k})`.
    pub storage: Vec<f64>,
    /// `u(t_k)ᵀ y(t_k)`.
    pub supply: Vec<f64>,
    /// `½ x(t_k)ᵀ T x(t_k)` when a valid `T` certificate exists.
    pub state_storage: Option<Vec<f64>>,
    /// One entry per interval: `(V_{k+1} − V_k)/dt − (s_k + s_{k+1})/2`.
    pub residuals: Vec<f64>,
}

impl StorageTrace {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_supply(&self) -> f64 {
        self.supply.iter().fold(0.0, |acc, s| acc.max(s.abs()))
    }
}

/// The quadrature horizon: from then on the whole past window lies inside
/// the recorded history, so the zero-extension kink at the history start
/// never enters the storage integral.
pub fn default_burn_in(hd: &HankelDiscretization) -> f64 {
    hd.grid().horizon()
}

/// Simulates `sys` from rest under the piecewise-linear interpolation of
/// `input_samples` (sample `k` at `t = k·dt`) and evaluates the storage
/// functional at every instant from `burn_in` on.
///
/// `burn_in = None` selects [`default_burn_in`].
pub fn storage_trace(
    sys: &StateSpaceModel,
    hd: &HankelDiscretization,
    input_samples: &[DVector<f64>],
    dt: f64,
    burn_in: Option<f64>,
) -> Result<StorageTrace> {
    sys.require_square("storage_trace")?;
    if hd.channels() != sys.inputs() {
        return Err(Error::domain("discretization and system disagree on the input count"));
    }
    let burn_in = match burn_in {
        Some(b) if b >= 0.0 && b.is_finite() => b,
        Some(b) => return Err(Error::domain(format!("burn-in must be nonnegative, got {b}"))),
        None => default_burn_in(hd),
    };
    let traj = sys.simulate_foh(input_samples, dt, &DVector::zeros(sys.states()))?;
    let start = traj.times.partition_point(|t| *t < burn_in - 1e-9 * dt);
    if start >= traj.len() {
        return Err(Error::domain(format!(
            "burn-in {burn_in} leaves no samples in a trajectory of length {}",
            traj.len()
        )));
    }
    let cert = solve_t(sys, T_TOL).ok().filter(|c| c.residuals_ok(T_TOL));

    let mut trace = StorageTrace {
        times: Vec::with_capacity(traj.len() - start),
        storage: Vec::with_capacity(traj.len() - start),
        supply: Vec::with_capacity(traj.len() - start),
        state_storage: cert.as_ref().map(|_| Vec::with_capacity(traj.len() - start)),
        residuals: Vec::with_capacity(traj.len() - start),
    };
    for k in start..traj.len() {
        let t = traj.times[k];
        let window = past_window(&traj, t, hd.grid())?;
        trace.times.push(t);
        trace.storage.push(storage_value(hd, &window)?);
        trace.supply.push(traj.inputs[k].dot(&traj.outputs[k]));
        if let (Some(c), Some(ss)) = (&cert, trace.state_storage.as_mut()) {
            let x = &traj.states[k];
            ss.push(0.5 * x.dot(&(&c.t * x)));
        }
    }
    for k in 1..trace.times.len() {
        let dv = (trace.storage[k] - trace.storage[k - 1]) / dt;
        trace.residuals.push(dv - 0.5 * (trace.supply[k] + trace.supply[k - 1]));
    }
    Ok(trace)
}

/// `max_φ |(V(u+εφ) − V(u−εφ))/(2ε) − ⟨Γu, φ⟩| / (1 + |⟨Γu, φ⟩|)`.
pub fn gradient_check(
    hd: &HankelDiscretization,
    u: &SampledSignal,
    directions: &[SampledSignal],
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    let gu = apply_hankel(hd, u)?;
    let mut worst = 0.0f64;
    for phi in directions {
        let plus = storage_value(hd, &u.combine(1.0, phi, eps)?)?;
        let minus = storage_value(hd, &u.combine(1.0, phi, -eps)?)?;
        let fd = (plus - minus) / (2.0 * eps);
        let exact = l2_inner(&gu, phi)?;
        worst = worst.max((fd - exact).abs() / (1.0 + exact.abs()));
    }
    Ok(worst)
}

/// `(A, B, −CA, 0)`, whose impulse response is `−g′(t)`.
pub fn derivative_system(sys: &StateSpaceModel) -> StateSpaceModel {
    let c = -(sys.c() * sys.a());
    StateSpaceModel::new(
        sys.a().clone(),
        sys.b().clone(),
        c,
        DMatrix::zeros(sys.outputs(), sys.inputs()),
    )
    .expect("dimensions are inherited from a valid model")
}
