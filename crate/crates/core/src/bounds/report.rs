use serde::Serialize;

use super::{
    check_conditions, chi, ekf_radius, lyapunov_rate, moment_bound_xhat, sigma_pi, signal_moment_bound,
    signal_radius, tau_t, varpi, ConditionFlags, ProblemConstants,
};
use crate::error::Result;

/// Every closed-form quantity of a problem on caller-supplied grids.
#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub constants: ProblemConstants,
    pub times: Vec<f64>,
    pub tau: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub pi: Vec<f64>,
    pub pi_inf: f64,
    pub deltas: Vec<f64>,
    pub varpi: Vec<f64>,
    pub chi: f64,
    /// `Λ`; absent without a sensor (`ρ(S) = 0`).
    pub lambda: Option<f64>,
    pub delta_exponent: Option<f64>,
    pub flags: ConditionFlags,
    /// Per δ. Absent when `λ_A ≤ 0`.
    pub signal_radius: Option<Vec<f64>>,
    /// `ekf_radius[i][j]` at `deltas[i]`, `times[j]`, from `x = x̂`, `p = P₀`.
    pub ekf_radius: Option<Vec<Vec<f64>>>,
    /// `(n − ½) tr R₁/λ_A` for n = 1, 2.
    pub signal_moment: Option<Vec<f64>>,
    /// `moment_bound_xhat(n, t)` for n = 1, 2 on the time grid.
    pub filter_moment: Option<Vec<Vec<f64>>>,
}

impl BoundsReport {
    pub fn build(c: &ProblemConstants, times: &[f64], deltas: &[f64], alpha: f64) -> Result<Self> {
        let mut tau = Vec::with_capacity(times.len());
        let mut sigma2 = Vec::with_capacity(times.len());
        let mut pi = Vec::with_capacity(times.len());
        let mut pi_inf = f64::NAN;
        for &t in times {
            tau.push(tau_t(c, t)?);
            let sp = sigma_pi(c, t)?;
            sigma2.push(sp.sigma2_t);
            pi.push(sp.pi_t);
            pi_inf = sp.pi_inf;
        }
        if times.is_empty() {
            pi_inf = sigma_pi(c, 0.0)?.pi_inf;
        }
        let varpi = deltas.iter().map(|&d| varpi(d)).collect::<Result<Vec<_>>>()?;
        let rate = if c.rho_s > 0.0 { Some(lyapunov_rate(c)?) } else { None };
        let flags = check_conditions(c, alpha)?;
        let drift_ok = c.lambda_drift > 0.0;
        let signal_radius = if drift_ok {
            Some(deltas.iter().map(|&d| signal_radius(c, d)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        let ekf = if drift_ok {
            let mut rows = Vec::with_capacity(deltas.len());
            for &d in deltas {
                rows.push(
                    times
                        .iter()
                        .map(|&t| ekf_radius(c, d, t, 0.0, c.tr_p0))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            Some(rows)
        } else {
            None
        };
        let (signal_moment, filter_moment) = if drift_ok {
            let sm = (1..=2).map(|n| signal_moment_bound(c, n)).collect::<Result<Vec<_>>>()?;
            let fm = (1..=2)
                .map(|n| times.iter().map(|&t| moment_bound_xhat(c, n, t)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            (Some(sm), Some(fm))
        } else {
            (None, None)
        };
        Ok(Self {
            constants: *c,
            times: times.to_vec(),
            tau,
            sigma2,
            pi,
            pi_inf,
            deltas: deltas.to_vec(),
            varpi,
            chi: chi(c),
            lambda: rate.map(|r| r.rate),
            delta_exponent: rate.map(|r| r.delta_exponent),
            flags,
            signal_radius,
            ekf_radius: ekf,
            signal_moment,
            filter_moment,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_for_forgetting_example() {
        let c = ProblemConstants {
            lambda_jac: 5.0,
            kappa_jac: 0.0,
            lambda_drift: 2.5,
            tr_r1: 0.01,
            rho_s: 1.0,
            tr_p0: 1.0,
            rho_p0: 1.0,
            r1: 1,
        };
        let r = BoundsReport::build(&c, &[0.0, 1.0, 10.0], &[0.5, 1.0], 1.1).unwrap();
        assert!(r.flags.all());
        assert!(r.lambda.unwrap() > 0.0);
        assert_eq!(r.ekf_radius.as_ref().unwrap()[1].len(), 3);
        assert_eq!(r.chi, 4.0);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"delta_exponent\""));
    }
}
