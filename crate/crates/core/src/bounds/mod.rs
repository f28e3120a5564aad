//! Closed-form constants, confidence radii, moment bounds, Laplace
//! right-hand sides and the admissibility conditions of the stability
//! theory. Everything here is deterministic scalar arithmetic.

mod gronwall;
mod laplace;
mod radii;
mod rates;
mod report;

pub use gronwall::{gronwall_moment_rhs, hilbert_rhs};
pub use laplace::{
    chi_laplace_bound, laplace_rhs, laplace_time_avg_coefficient, laplace_time_avg_rhs,
    signal_laplace_coefficient, xhat_laplace_coefficient,
};
pub use radii::{
    chi, ekf_radius, event_control_radius, moment_bound_xhat, ramp, sigma_pi, signal_moment_bound,
    signal_radius, tau_t, varpi, SigmaPi, RAMP_SWITCHOVER,
};
pub use rates::{check_conditions, lyapunov_rate, ConditionFlags, LyapunovRate};
pub use report::BoundsReport;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_eigenvalue, SymMat};
use crate::models::{ObservationModel, RegularityConstants, SignalModel};

/// Every scalar entering the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// `λ_∂A`
    pub lambda_jac: f64,
    /// `κ_∂A`
    pub kappa_jac: f64,
    /// `λ_A`
    pub lambda_drift: f64,
    pub tr_r1: f64,
    pub rho_s: f64,
    pub tr_p0: f64,
    pub rho_p0: f64,
    pub r1: usize,
}

impl ProblemConstants {
    pub fn new(
        reg: RegularityConstants,
        tr_r1: f64,
        rho_s: f64,
        tr_p0: f64,
        rho_p0: f64,
        r1: usize,
    ) -> Self {
        Self {
            lambda_jac: reg.lambda_jac,
            kappa_jac: reg.kappa_jac,
            lambda_drift: reg.lambda_drift,
            tr_r1,
            rho_s,
            tr_p0,
            rho_p0,
            r1,
        }
    }

    /// Collects the constants of a concrete problem with initial Riccati matrix `p0`.
    pub fn from_problem(model: &SignalModel, obs: &ObservationModel, p0: &SymMat) -> Result<Self> {
        let reg = model.regularity_constants()?;
        Ok(Self::new(
            reg,
            model.r1().trace(),
            obs.rho_s(),
            p0.trace(),
            max_eigenvalue(p0)?,
            model.dim(),
        ))
    }

    pub(crate) fn require_jac_stable(&self) -> Result<()> {
        if self.lambda_jac > 0.0 {
            Ok(())
        } else {
            Err(Error::NotStable(self.lambda_jac))
        }
    }

    pub(crate) fn require_drift_stable(&self) -> Result<()> {
        if self.lambda_drift > 0.0 {
            Ok(())
        } else {
            Err(Error::NotStable(self.lambda_drift))
        }
    }
}
