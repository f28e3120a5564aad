use std::f64::consts::{E, SQRT_2};

use serde::Serialize;

use super::ProblemConstants;
use crate::error::{Error, Result};

/// Below this gap `|λ_A − λ_∂A|` the ramp uses its limit `t e^{−λt}`.
pub const RAMP_SWITCHOVER: f64 = 1e-12;

/// `τ_t = e^{−λ_∂A t} tr(P₀) + tr(R₁)/λ_∂A`, the deterministic envelope of `tr(P_t)`.
pub fn tau_t(c: &ProblemConstants, t: f64) -> Result<f64> {
    c.require_jac_stable()?;
    Ok((-c.lambda_jac * t).exp() * c.tr_p0 + c.tr_r1 / c.lambda_jac)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaPi {
    /// `σ²(t) = 1 + 2π(t)`
    pub sigma2_t: f64,
    /// `π(t) = τ_t² ρ(S) / tr(R₁)`
    pub pi_t: f64,
    /// `π(∞) = (ρ(S)/λ_∂A)(tr(R₁)/λ_∂A)`
    pub pi_inf: f64,
}

impl SigmaPi {
    /// `1 + 2π(∞)`, the variance inflation entering the filter bounds.
    pub fn sigma2_inf(&self) -> f64 {
        1.0 + 2.0 * self.pi_inf
    }
}

pub fn sigma_pi(c: &ProblemConstants, t: f64) -> Result<SigmaPi> {
    let tau = tau_t(c, t)?;
    if !(c.tr_r1 > 0.0) {
        return Err(Error::InvalidArgument("tr(R1) must be positive".into()));
    }
    let pi_t = tau * tau * c.rho_s / c.tr_r1;
    Ok(SigmaPi {
        sigma2_t: 1.0 + 2.0 * pi_t,
        pi_t,
        pi_inf: (c.rho_s / c.lambda_jac) * (c.tr_r1 / c.lambda_jac),
    })
}

/// `ϖ(δ) = e²/√2 · [½ + δ + √δ]`.
pub fn varpi(delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be >= 0, got {delta}")));
    }
    Ok(E * E / SQRT_2 * (0.5 + delta + delta.sqrt()))
}

/// `χ(P₀) = 4 r₁ ρ(P₀)`.
pub fn chi(c: &ProblemConstants) -> f64 {
    4.0 * c.r1 as f64 * c.rho_p0
}

/// `|e^{−a t} − e^{−b t}| / |a − b|`, with the limit `t e^{−a t}` at `a = b`.
pub fn ramp(a: f64, b: f64, t: f64) -> f64 {
    let gap = (a - b).abs();
    let slow = a.min(b);
    if gap < RAMP_SWITCHOVER {
        return t * (-slow * t).exp();
    }
    // e^{−slow t}(1 − e^{−gap t})/gap, free of cancellation for small gaps
    (-slow * t).exp() * -(-gap * t).exp_m1() / gap
}

/// Signal event radius `ϖ(δ) tr(R₁)/λ_A`.
pub fn signal_radius(c: &ProblemConstants, delta: f64) -> Result<f64> {
    c.require_drift_stable()?;
    Ok(varpi(delta)? * c.tr_r1 / c.lambda_drift)
}

/// `z² ϖ(δ)`: radius of the event `(Z/z)² ≤ ϖ(δ)`.
pub fn event_control_radius(z_sq: f64, delta: f64) -> Result<f64> {
    if !(z_sq >= 0.0) {
        return Err(Error::InvalidArgument(format!("z^2 must be >= 0, got {z_sq}")));
    }
    Ok(z_sq * varpi(delta)?)
}

/// Filter event radius for `‖X_t − X̂_t‖²` started at `(x, x̂, p)`:
/// `4ϖ(δ)(tr R₁/λ_A)σ² + 2e^{−λ_∂A t}‖x − x̂‖² + 8ϖ(δ)·ramp(t)·ρ(S)·tr(p)²`.
///
/// `σ² = 1 + 2π(∞)`, the inflation that the moment estimate carries.
pub fn ekf_radius(
    c: &ProblemConstants,
    delta: f64,
    t: f64,
    init_err_sq: f64,
    tr_p: f64,
) -> Result<f64> {
    c.require_drift_stable()?;
    let sp = sigma_pi(c, t)?;
    let w = varpi(delta)?;
    Ok(4.0 * w * c.tr_r1 / c.lambda_drift * sp.sigma2_inf()
        + 2.0 * (-c.lambda_jac * t).exp() * init_err_sq
        + 8.0 * w * ramp(c.lambda_drift, c.lambda_jac, t) * c.rho_s * tr_p * tr_p)
}

/// Bound on `E(‖φ_t(X̂₀) − X̂_t‖ⁿ)^{2/n}`:
/// `(2n − 1){(tr R₁/λ_A) σ²/2 + ramp(t) ρ(S) tr(P₀)²}`.
pub fn moment_bound_xhat(c: &ProblemConstants, n: u32, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    c.require_drift_stable()?;
    let sp = sigma_pi(c, t)?;
    let inner = c.tr_r1 / c.lambda_drift * sp.sigma2_inf() / 2.0
        + ramp(c.lambda_drift, c.lambda_jac, t) * c.rho_s * c.tr_p0 * c.tr_p0;
    Ok((2 * n - 1) as f64 * inner)
}

/// Bound on `E(‖φ_t(x) − φ̄_t(x)‖^{2n})^{1/n}`: `(n − ½) tr(R₁)/λ_A`.
pub fn signal_moment_bound(c: &ProblemConstants, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    c.require_drift_stable()?;
    Ok((n as f64 - 0.5) * c.tr_r1 / c.lambda_drift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(lj: f64, la: f64, tr_r1: f64, rho_s: f64, tr_p0: f64) -> ProblemConstants {
        ProblemConstants {
            lambda_jac: lj,
            kappa_jac: 0.0,
            lambda_drift: la,
            tr_r1,
            rho_s,
            tr_p0,
            rho_p0: tr_p0,
            r1: 1,
        }
    }

    #[test]
    fn tau_examples() {
        let c = consts(2.0, 1.0, 1.0, 1.0, 1.0);
        assert!((tau_t(&c, 0.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((tau_t(&c, 1e6).unwrap() - 0.5).abs() < 1e-12);
        // e^{−2·ln2/2} = 1/2
        assert!((tau_t(&c, 2f64.ln() / 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(tau_t(&consts(0.0, 1.0, 1.0, 1.0, 1.0), 1.0), Err(Error::NotStable(_))));
    }

    #[test]
    fn sigma_pi_examples() {
        let c = consts(2.0, 1.0, 1.0, 1.0, 0.0);
        let s = sigma_pi(&c, 3.0).unwrap();
        assert!((s.pi_t - 0.25).abs() < 1e-15 && (s.sigma2_t - 1.5).abs() < 1e-15);
        assert!((s.pi_inf - 0.25).abs() < 1e-15);
        let s0 = sigma_pi(&consts(2.0, 1.0, 1.0, 0.0, 3.0), 1.0).unwrap();
        assert_eq!(s0.sigma2_t, 1.0);
    }

    #[test]
    fn varpi_values() {
        let k = E * E / SQRT_2;
        assert!((varpi(0.0).unwrap() - k / 2.0).abs() < 1e-14);
        assert!((varpi(0.0).unwrap() - 2.612426).abs() < 1e-6);
        assert!((varpi(1.0).unwrap() - 2.5 * k).abs() < 1e-13);
        assert!((varpi(4.0).unwrap() - 6.5 * k).abs() < 1e-13);
        assert!(varpi(-0.1).is_err());
        assert!(varpi(0.5).unwrap() < varpi(0.51).unwrap());
    }

    #[test]
    fn chi_values() {
        let mut c = consts(1.0, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(chi(&c), 4.0);
        c.r1 = 2;
        assert_eq!(chi(&c), 8.0);
    }

    #[test]
    fn radii() {
        let c = consts(2.0, 1.0, 1.0, 1.0, 0.0);
        let r = signal_radius(&c, 1.0).unwrap();
        assert!((r - varpi(1.0).unwrap()).abs() < 1e-14);
        let c2 = consts(2.0, 1.0, 2.0, 1.0, 0.0);
        assert!((signal_radius(&c2, 1.0).unwrap() - 2.0 * r).abs() < 1e-13);
        assert!((event_control_radius(1.0, 0.0).unwrap() - varpi(0.0).unwrap()).abs() < 1e-15);
        // composition with the signal moment scale
        assert!(
            (event_control_radius(c.tr_r1 / c.lambda_drift, 1.0).unwrap() - r).abs() < 1e-14
        );
        assert!(signal_radius(&consts(1.0, 0.0, 1.0, 1.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn ekf_radius_limits() {
        let c = consts(2.0, 1.0, 1.0, 1.0, 1.0);
        let sig2 = 1.0 + 2.0 * 0.25;
        let far = ekf_radius(&c, 1.0, 200.0, 3.0, 1.0).unwrap();
        assert!((far - 4.0 * varpi(1.0).unwrap() * sig2).abs() < 1e-10);
        let at0 = ekf_radius(&c, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!((at0 - 4.0 * varpi(0.0).unwrap() * sig2).abs() < 1e-13);
        let mut prev = f64::INFINITY;
        for k in 0..100 {
            let r = ekf_radius(&c, 1.0, 0.1 * k as f64, 2.0, 1.0).unwrap();
            // with tr(p) > 0 the ramp first rises; check decay after its peak
            if k > 20 {
                assert!(r <= prev + 1e-12);
            }
            prev = r;
        }
    }

    #[test]
    fn ramp_removable_singularity() {
        assert!((ramp(1.0, 1.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        let lim = ramp(1.0, 1.0, 2.5);
        let near = ramp(1.0 + 1e-9, 1.0, 2.5);
        assert!((near - lim).abs() < 1e-8);
        // ordinary branch agrees with the naive quotient
        let naive = ((-0.5f64 * 2.0).exp() - (-1.5f64 * 2.0).exp()) / 1.0;
        assert!((ramp(0.5, 1.5, 2.0) - naive).abs() < 1e-15);
        assert_eq!(ramp(0.5, 1.5, 2.0), ramp(1.5, 0.5, 2.0));
    }

    #[test]
    fn ekf_radius_continuous_across_equal_rates() {
        let mut c = consts(1.0, 1.0, 0.3, 2.0, 4.0);
        let at = ekf_radius(&c, 2.0, 1.7, 0.5, 4.0).unwrap();
        // the first-order drift of the stationary term cancels in the symmetric mean
        c.lambda_drift = 1.0 + 1e-9;
        let above = ekf_radius(&c, 2.0, 1.7, 0.5, 4.0).unwrap();
        c.lambda_drift = 1.0 - 1e-9;
        let below = ekf_radius(&c, 2.0, 1.7, 0.5, 4.0).unwrap();
        let mid = 0.5 * (above + below);
        assert!((mid - at).abs() < 1e-8, "{}", (mid - at).abs());
    }

    #[test]
    fn moment_bounds() {
        let c = consts(2.0, 1.0, 1.0, 1.0, 0.0);
        let sig2 = 1.5;
        for n in 1..5u32 {
            let b = moment_bound_xhat(&c, n, 3.0).unwrap();
            assert!((b - (2 * n - 1) as f64 * sig2 / 2.0).abs() < 1e-14);
        }
        let c1 = consts(2.0, 1.0, 1.0, 1.0, 2.0);
        let far = moment_bound_xhat(&c1, 1, 100.0).unwrap();
        assert!((far - sig2 / 2.0).abs() < 1e-12);
        assert!((signal_moment_bound(&c, 1).unwrap() - 0.5).abs() < 1e-15);
        let b2 = signal_moment_bound(&c, 2).unwrap();
        let b3 = signal_moment_bound(&c, 3).unwrap();
        assert!((b3 - b2 - (b2 - 0.5)).abs() < 1e-15);
        assert!(moment_bound_xhat(&c, 0, 1.0).is_err());
    }
}
