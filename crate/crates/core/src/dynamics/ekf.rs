use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{psd_project, Mat, SymMat, Vector};
use crate::models::{ObservationModel, SignalModel};

/// Abort threshold on `‖x̂‖` and `tr(P)`.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

/// EKF mean `x̂`, Riccati matrix `P` and current time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub mean: Vector,
    pub cov: SymMat,
    pub t: f64,
}

impl FilterState {
    pub fn new(mean: Vector, cov: SymMat) -> Result<Self> {
        if mean.dim() != cov.dim() {
            return Err(dim_mismatch(mean.dim(), cov.dim()));
        }
        Ok(Self { mean, cov, t: 0.0 })
    }

    /// Squared joint distance `‖x̂ − x̌‖² + ‖P − P̌‖²_F`.
    pub fn joint_dist_sq(&self, other: &FilterState) -> f64 {
        let dp: f64 = self
            .cov
            .as_mat()
            .as_slice()
            .iter()
            .zip(other.cov.as_mat().as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.mean.dist_sq(&other.mean) + dp
    }

    pub(crate) fn is_diverged(&self) -> bool {
        !self.mean.is_finite()
            || !self.cov.is_finite()
            || self.mean.norm() > DIVERGENCE_THRESHOLD
            || self.cov.trace() > DIVERGENCE_THRESHOLD
    }
}

/// One explicit Euler step of
/// `dx̂ = A(x̂) dt + P BᵀR₂⁻¹ (dY − B x̂ dt)` and
/// `∂ₜP = ∂A(x̂) P + P ∂A(x̂)ᵀ + R₁ − P S P`,
/// followed by symmetrisation and projection onto the PSD cone.
pub fn step_ekf(
    state: &FilterState,
    model: &SignalModel,
    obs: &ObservationModel,
    dy: &Vector,
    dt: f64,
) -> Result<FilterState> {
    let n = model.dim();
    state.mean.check_dim(n)?;
    if state.cov.dim() != n || obs.signal_dim() != n {
        return Err(dim_mismatch(n, state.cov.dim()));
    }
    dy.check_dim(obs.obs_dim())?;
    let mut next = state.clone();
    advance(&mut next, model, obs, dy.as_slice(), dt)?;
    Ok(next)
}

/// In-place step used by the simulators; dimensions are assumed checked.
pub(crate) fn advance(
    state: &mut FilterState,
    model: &SignalModel,
    obs: &ObservationModel,
    dy: &[f64],
    dt: f64,
) -> Result<()> {
    let n = model.dim();
    let m = obs.obs_dim();
    let x = &state.mean;
    let p = state.cov.as_mat().as_slice();
    let b = obs.b().as_slice();
    let gain = obs.gain().as_slice();

    // innovation dY − B x̂ dt
    let mut innov = vec![0.0; m];
    for (r, slot) in innov.iter_mut().enumerate() {
        let bx: f64 = (0..n).map(|c| b[r * n + c] * x[c]).sum();
        *slot = dy[r] - bx * dt;
    }
    // g = BᵀR₂⁻¹ innov, correction = P g
    let g: Vec<f64> = (0..n)
        .map(|i| (0..m).map(|r| gain[i * m + r] * innov[r]).sum())
        .collect();
    let drift = model.drift_unchecked(x);
    let mut mean = Vec::with_capacity(n);
    for i in 0..n {
        let corr: f64 = (0..n).map(|k| p[i * n + k] * g[k]).sum();
        mean.push(x[i] + drift[i] * dt + corr);
    }

    let jac = model.jacobian_unchecked(x);
    let j = jac.as_slice();
    let s = obs.s().as_mat().as_slice();
    let r1 = model.r1().as_mat().as_slice();
    let mut jp = vec![0.0; n * n];
    let mut ps = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let mut a = 0.0;
            let mut c = 0.0;
            for l in 0..n {
                a += j[i * n + l] * p[l * n + k];
                c += p[i * n + l] * s[l * n + k];
            }
            jp[i * n + k] = a;
            ps[i * n + k] = c;
        }
    }
    let mut next = vec![0.0; n * n];
    for i in 0..n {
        for k in i..n {
            let psp: f64 = (0..n).map(|l| ps[i * n + l] * p[l * n + k]).sum();
            let psp_t: f64 = (0..n).map(|l| ps[k * n + l] * p[l * n + i]).sum();
            let deriv = jp[i * n + k] + jp[k * n + i] + r1[i * n + k] - 0.5 * (psp + psp_t);
            let v = p[i * n + k] + deriv * dt;
            next[i * n + k] = v;
            next[k * n + i] = v;
        }
    }
    let cov = SymMat::from_mat_unchecked(Mat::from_raw(n, n, next));
    if !cov.is_finite() || mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::DivergedFilter { t: state.t + dt });
    }
    state.cov = psd_project(&cov)?;
    state.mean = Vector::from_vec_unchecked(mean);
    state.t += dt;
    Ok(())
}
