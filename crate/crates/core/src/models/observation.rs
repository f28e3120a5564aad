use super::signal::{Drift, SignalModel};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{frobenius_norm, max_eigenvalue, sym_inverse, sym_sqrt, Mat, SymMat, Vector};

/// Relative tolerance for the sensor condition `S = ρ(S) I`.
pub const CONDITION_S_TOLERANCE: f64 = 1e-10;

/// Sensor `dY = B X dt + R₂^{1/2} dV` with its derived quantities
/// `S = BᵀR₂⁻¹B` and `ρ(S)`.
#[derive(Clone, Debug)]
pub struct ObservationModel {
    b: Mat,
    r2: SymMat,
    r2_sqrt: SymMat,
    gain: Mat,
    s: SymMat,
    rho_s: f64,
    condition_s: bool,
}

impl ObservationModel {
    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn r2(&self) -> &SymMat {
        &self.r2
    }

    pub fn r2_sqrt(&self) -> &SymMat {
        &self.r2_sqrt
    }

    /// `BᵀR₂⁻¹`, the factor multiplying the innovation.
    pub fn gain(&self) -> &Mat {
        &self.gain
    }

    pub fn s(&self) -> &SymMat {
        &self.s
    }

    pub fn rho_s(&self) -> f64 {
        self.rho_s
    }

    /// True when `S` is a multiple of the identity.
    pub fn condition_s(&self) -> bool {
        self.condition_s
    }

    /// Signal dimension `r₁`.
    pub fn signal_dim(&self) -> usize {
        self.b.cols()
    }

    /// Observation dimension `r₂`.
    pub fn obs_dim(&self) -> usize {
        self.b.rows()
    }
}

/// Builds the sensor, computing `S`, `ρ(S)` and the condition flag.
pub fn observation_params(b: Mat, r2: SymMat) -> Result<ObservationModel> {
    if r2.dim() != b.rows() {
        return Err(dim_mismatch(b.rows(), r2.dim()));
    }
    if !r2.is_positive_definite() {
        return Err(Error::NotPd);
    }
    let r2_inv = sym_inverse(&r2)?;
    let r2_sqrt = sym_sqrt(&r2)?;
    let gain = b.transpose().mul_mat_unchecked(r2_inv.as_mat());
    let s = SymMat::symmetrize(&gain.mul_mat_unchecked(&b))?;
    let rho_s = max_eigenvalue(&s)?;
    let n = s.dim();
    let deviation = frobenius_norm(s.sub(&SymMat::scaled_identity(n, rho_s))?.as_mat());
    let condition_s = deviation <= CONDITION_S_TOLERANCE * rho_s.max(1.0);
    Ok(ObservationModel {
        b,
        r2,
        r2_sqrt,
        gain,
        s,
        rho_s,
        condition_s,
    })
}

/// The map `T = R₂^{−1/2} B` of the canonical change of basis.
pub fn canonical_map(obs: &ObservationModel) -> Result<Mat> {
    if !obs.b.is_square() {
        return Err(Error::NotReducible(format!(
            "sensor is {}x{}, signal and observation dimensions differ",
            obs.b.rows(),
            obs.b.cols()
        )));
    }
    let r2_inv_sqrt = sym_sqrt(&sym_inverse(&obs.r2)?)?;
    Ok(r2_inv_sqrt.as_mat().mul_mat_unchecked(&obs.b))
}

/// Rewrites the problem in the coordinates `𝒳 = R₂^{−1/2} B X`, where the
/// sensor becomes `d𝒴 = 𝒳 dt + dV` and therefore `S = I`.
pub fn canonical_change_of_basis(
    model: &SignalModel,
    obs: &ObservationModel,
) -> Result<(SignalModel, ObservationModel)> {
    if obs.signal_dim() != model.dim() {
        return Err(dim_mismatch(model.dim(), obs.signal_dim()));
    }
    let t = canonical_map(obs)?;
    let t_inv = t
        .inverse()
        .map_err(|_| Error::NotReducible("R2^{-1/2} B is not invertible".into()))?;
    let drift = match model.drift_family() {
        Drift::Linear(a) => Drift::Linear(t.mul_mat_unchecked(a).mul_mat_unchecked(&t_inv)),
        other => Drift::Conjugated {
            inner: Box::new(other.clone()),
            map: t.clone(),
            map_inv: t_inv,
        },
    };
    let r1_new = SymMat::symmetrize(
        &t.mul_mat_unchecked(model.r1().as_mat())
            .mul_mat_unchecked(&t.transpose()),
    )?;
    let n = model.dim();
    let signal = SignalModel::build(drift, n, r1_new)?;
    let sensor = observation_params(Mat::identity(n), SymMat::identity(n))?;
    Ok((signal, sensor))
}

/// Maps a state into the canonical coordinates.
pub fn to_canonical(obs: &ObservationModel, x: &Vector) -> Result<Vector> {
    canonical_map(obs)?.mul_vec(x)
}
