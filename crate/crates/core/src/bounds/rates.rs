use std::f64::consts::E;

use serde::Serialize;

use super::ProblemConstants;
use crate::error::{Error, Result};

/// Admissibility flags of the forgetting theory, with the evaluated sides.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionFlags {
    pub lambda_positive: bool,
    /// `λ_∂A > √(2κ_∂A tr R₁) ∨ 4ρ(S)`
    pub reg_hyp: bool,
    pub reg_hyp_rhs: f64,
    /// `4eα √(ρ(S)/λ_∂A)(tr R₁/λ_A)[1 + 2(tr R₁/λ_∂A)(ρ(S)/λ_∂A)] < 1`
    pub has0: bool,
    pub has0_lhs: f64,
    pub alpha: f64,
}

impl ConditionFlags {
    pub fn all(&self) -> bool {
        self.lambda_positive && self.reg_hyp && self.has0
    }
}

pub fn check_conditions(c: &ProblemConstants, alpha: f64) -> Result<ConditionFlags> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be > 1, got {alpha}")));
    }
    let lj = c.lambda_jac;
    let reg_hyp_rhs = (2.0 * c.kappa_jac * c.tr_r1).sqrt().max(4.0 * c.rho_s);
    let ratio = c.rho_s / lj;
    let has0_lhs = 4.0 * E * alpha * ratio.sqrt() * (c.tr_r1 / c.lambda_drift)
        * (1.0 + 2.0 * (c.tr_r1 / lj) * ratio);
    let lambda_positive = lj > 0.0 && c.lambda_drift > 0.0;
    Ok(ConditionFlags {
        lambda_positive,
        reg_hyp: lambda_positive && lj > reg_hyp_rhs,
        reg_hyp_rhs,
        has0: lambda_positive && has0_lhs < 1.0,
        has0_lhs,
        alpha,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LyapunovRate {
    /// `Λ`
    pub rate: f64,
    /// `δ = ½ √(λ_∂A/ρ(S))`
    pub delta_exponent: f64,
    /// `λ_∂A (½ − 2 κ_∂A tr R₁/λ_∂A²)`
    pub lower_bound: f64,
}

/// Forgetting rate
/// `Λ = λ_∂A [1 − 2(κ_∂A/λ_∂A)(tr R₁/λ_∂A) − √(ρ(S)/λ_∂A)(1 − ¾√(ρ(S)/λ_∂A))]`
/// and the moment order `δ` at which the contraction holds.
pub fn lyapunov_rate(c: &ProblemConstants) -> Result<LyapunovRate> {
    c.require_jac_stable()?;
    if !(c.rho_s > 0.0) {
        return Err(Error::InvalidArgument("rho(S) must be positive".into()));
    }
    let lj = c.lambda_jac;
    let root = (c.rho_s / lj).sqrt();
    let drift_term = 2.0 * (c.kappa_jac / lj) * (c.tr_r1 / lj);
    let rate = lj * (1.0 - drift_term - root * (1.0 - 0.75 * root));
    let lower_bound = lj * (0.5 - drift_term);
    if lj > 4.0 * c.rho_s {
        debug_assert!(rate >= lower_bound - 1e-12 * lj);
    }
    Ok(LyapunovRate {
        rate,
        delta_exponent: 0.5 / root,
        lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(lj: f64, kj: f64, la: f64, tr_r1: f64, rho_s: f64) -> ProblemConstants {
        ProblemConstants {
            lambda_jac: lj,
            kappa_jac: kj,
            lambda_drift: la,
            tr_r1,
            rho_s,
            tr_p0: 1.0,
            rho_p0: 1.0,
            r1: 1,
        }
    }

    #[test]
    fn conditions_example() {
        let c = consts(5.0, 0.0, 2.5, 0.01, 1.0);
        let f = check_conditions(&c, 1.1).unwrap();
        assert!(f.reg_hyp);
        let want = 4.0 * E * 1.1 * 0.2f64.sqrt() * 0.004 * (1.0 + 2.0 * 0.002 * 0.2);
        assert!((f.has0_lhs - want).abs() < 1e-15);
        assert!((f.has0_lhs - 0.0214).abs() < 1e-4);
        assert!(f.has0 && f.all());
    }

    #[test]
    fn conditions_fail_for_strong_sensor() {
        let f = check_conditions(&consts(5.0, 0.0, 2.5, 0.01, 2.0), 1.1).unwrap();
        assert!(!f.reg_hyp);
        let f = check_conditions(&consts(5.0, 0.0, 2.5, 0.0, 1.0), 1.1).unwrap();
        assert!(f.reg_hyp && f.has0 && f.has0_lhs == 0.0);
        assert!(check_conditions(&consts(5.0, 0.0, 2.5, 0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn has0_monotone_in_alpha() {
        let c = consts(5.0, 0.0, 2.5, 0.5, 1.0);
        let mut was_false = false;
        for k in 1..200 {
            let f = check_conditions(&c, 1.0 + 0.1 * k as f64).unwrap();
            if was_false {
                assert!(!f.has0);
            }
            was_false |= !f.has0;
        }
        assert!(was_false);
    }

    #[test]
    fn lyapunov_examples() {
        let r = lyapunov_rate(&consts(1.0, 0.0, 0.5, 1.0, 1.0 / 16.0)).unwrap();
        assert!((r.rate - 0.796875).abs() < 1e-15);
        assert!((r.delta_exponent - 2.0).abs() < 1e-15);
        let r = lyapunov_rate(&consts(3.0, 0.0, 1.5, 1.0, 1e-14)).unwrap();
        assert!((r.rate - 3.0).abs() < 1e-6);
        assert!(lyapunov_rate(&consts(3.0, 0.0, 1.5, 1.0, 0.0)).is_err());
        let r = lyapunov_rate(&consts(5.0, 0.0, 2.5, 0.01, 1.0)).unwrap();
        assert!(r.delta_exponent > 1.0);
    }

    #[test]
    fn lyapunov_monotone() {
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let r = lyapunov_rate(&consts(5.0, 0.1 * k as f64, 2.5, 0.3, 1.0)).unwrap();
            assert!(r.rate <= prev);
            prev = r.rate;
        }
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            // ρ(S) within the admissible range λ_∂A > 4ρ(S)
            let r = lyapunov_rate(&consts(5.0, 0.0, 2.5, 0.3, 1.25 * k as f64 / 50.0)).unwrap();
            assert!(r.rate <= prev);
            prev = r.rate;
        }
    }
}
