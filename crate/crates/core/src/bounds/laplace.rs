use std::f64::consts::{E, SQRT_2};

use super::{sigma_pi, ProblemConstants};
use crate::error::{Error, Result};

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1], got {eps}")))
    }
}

/// Uniform Laplace bound `½ exp((1−ε)/e · u/v) + e/(2√2) · ε^{−1/2}`.
pub fn laplace_rhs(eps: f64, u_a: f64, v_a: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(v_a > 0.0) {
        return Err(Error::InvalidArgument("v must be positive".into()));
    }
    Ok(0.5 * ((1.0 - eps) / E * u_a / v_a).exp() + E / (2.0 * SQRT_2) / eps.sqrt())
}

/// Coefficient `a²ε/(4v)` of the time-integrated Laplace estimate.
pub fn laplace_time_avg_coefficient(a: f64, v: f64, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) || !(v > 0.0) {
        return Err(Error::InvalidArgument("need eps in [0,1] and v > 0".into()));
    }
    Ok(a * a * eps / (4.0 * v))
}

/// `exp[(a/v) ε/(1 + √(1−ε)) ∫U]^{1/2}` for a deterministic source with
/// integral `u_integral`.
pub fn laplace_time_avg_rhs(a: f64, v: f64, eps: f64, u_integral: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) || !(v > 0.0) {
        return Err(Error::InvalidArgument("need eps in [0,1] and v > 0".into()));
    }
    Ok((0.5 * (a / v) * eps / (1.0 + (1.0 - eps).sqrt()) * u_integral).exp())
}

/// Exponent coefficient `(1−ε)/(4e) · λ_A/tr(R₁)` for `‖φ_t(x) − φ̄_t(x)‖²`.
pub fn signal_laplace_coefficient(c: &ProblemConstants, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    c.require_drift_stable()?;
    Ok((1.0 - eps) / (4.0 * E) * c.lambda_drift / c.tr_r1)
}

/// Exponent coefficient `(1−ε)/(4eσ²) · λ_A/tr(R₁)` for `‖φ_t(X̂₀) − X̂_t‖²`.
pub fn xhat_laplace_coefficient(c: &ProblemConstants, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    c.require_drift_stable()?;
    let s = sigma_pi(c, 0.0)?;
    Ok((1.0 - eps) / (4.0 * E * s.sigma2_inf()) * c.lambda_drift / c.tr_r1)
}

/// Bound `e` on `E exp(‖X₀ − X̂₀‖²/χ(P₀))`.
pub fn chi_laplace_bound() -> f64 {
    E
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_examples() {
        let v = laplace_rhs(1.0, 0.0, 1.0).unwrap();
        assert!((v - (0.5 + E / (2.0 * SQRT_2))).abs() < 1e-15);
        assert!((v - 1.461058).abs() < 1e-6);
        // ε → 0⁺ diverges like ε^{−1/2}
        let a = laplace_rhs(1e-8, 1.0, 1.0).unwrap();
        let b = laplace_rhs(1e-10, 1.0, 1.0).unwrap();
        assert!((b / a - 10.0).abs() < 1e-3);
        assert!(laplace_rhs(0.0, 0.0, 1.0).is_err());
        assert!(laplace_rhs(1.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn time_average_signal_specialisation() {
        // a = 2λ_A, v = 4 tr R₁, U = tr R₁: coefficient λ_A² ε/(4 tr R₁)
        let (la, tr) = (1.3, 0.7);
        let coef = laplace_time_avg_coefficient(2.0 * la, 4.0 * tr, 0.5).unwrap();
        assert!((coef - la * la * 0.5 / (4.0 * tr)).abs() < 1e-15);
        let t = 3.0;
        let rhs = laplace_time_avg_rhs(2.0 * la, 4.0 * tr, 0.5, tr * t).unwrap();
        // never above the cruder exp(λ_A ε t / 2)
        assert!(rhs <= (la * 0.5 * t / 2.0).exp());
        assert_eq!(laplace_time_avg_rhs(1.0, 1.0, 0.0, 5.0).unwrap(), 1.0);
    }
}
