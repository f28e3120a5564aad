use super::paths::PathBundle;
use super::Recording;
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::Vector;
use crate::models::SignalModel;

/// Explicit schemes need `dt · λ_∂A` below this margin.
pub const STEP_STABILITY_MARGIN: f64 = 0.5;

pub(crate) fn check_step(model: &SignalModel, dt: f64) -> Result<()> {
    let lambda = model.regularity_constants()?.lambda_jac;
    if dt * lambda >= STEP_STABILITY_MARGIN {
        return Err(Error::UnstableStep { dt, lambda });
    }
    Ok(())
}

/// One Euler-Maruyama step `X += A(X) dt + R₁^{1/2} ΔW`.
pub(crate) fn signal_step(model: &SignalModel, x: &mut Vector, dw: &[f64], dt: f64) {
    let a = model.drift_unchecked(x);
    let rs = model.r1_sqrt();
    let n = x.dim();
    for i in 0..n {
        let mut noise = 0.0;
        for (j, w) in dw.iter().enumerate() {
            noise += rs.get(i, j) * w;
        }
        x[i] += a[i] * dt + noise;
    }
}

/// Euler-Maruyama path of the signal, one state per grid point (`steps + 1`).
pub fn simulate_signal(model: &SignalModel, x0: &Vector, bundle: &PathBundle) -> Result<Vec<Vector>> {
    simulate_signal_recorded(model, x0, bundle, &Recording::Every(1))
}

/// As [`simulate_signal`], keeping only the grid points selected by `recording`.
pub fn simulate_signal_recorded(
    model: &SignalModel,
    x0: &Vector,
    bundle: &PathBundle,
    recording: &Recording,
) -> Result<Vec<Vector>> {
    x0.check_dim(model.dim())?;
    if bundle.signal_dim() != model.dim() {
        return Err(dim_mismatch(model.dim(), bundle.signal_dim()));
    }
    check_step(model, bundle.dt())?;
    let dt = bundle.dt();
    let mut x = x0.clone();
    let mut out = Vec::new();
    if recording.keeps(0) {
        out.push(x.clone());
    }
    for k in 0..bundle.steps() {
        signal_step(model, &mut x, bundle.dw(k), dt);
        if recording.keeps(k + 1) {
            out.push(x.clone());
        }
    }
    Ok(out)
}

fn rk4_step(model: &SignalModel, x: &Vector, dt: f64) -> Vector {
    let k1 = model.drift_unchecked(x);
    let mut y = x.clone();
    y.axpy(0.5 * dt, &k1);
    let k2 = model.drift_unchecked(&y);
    let mut y = x.clone();
    y.axpy(0.5 * dt, &k2);
    let k3 = model.drift_unchecked(&y);
    let mut y = x.clone();
    y.axpy(dt, &k3);
    let k4 = model.drift_unchecked(&y);
    let mut out = x.clone();
    out.axpy(dt / 6.0, &k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    out
}

/// Noise-free flow `∂ₜx = A(x)` by the classical four-stage Runge-Kutta
/// method on the grid `0, dt, …, round(T/dt)·dt`.
pub fn deterministic_flow(model: &SignalModel, x0: &Vector, dt: f64, horizon: f64) -> Result<Vec<Vector>> {
    x0.check_dim(model.dim())?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let steps = (horizon / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    out.push(x.clone());
    for _ in 0..steps {
        x = rk4_step(model, &x, dt);
        out.push(x.clone());
    }
    Ok(out)
}

/// Solves `A(x⋆) = 0` by damped Newton iterations from the origin.
pub fn fixed_point(model: &SignalModel) -> Result<Vector> {
    const MAX_ITER: usize = 200;
    const RESIDUAL: f64 = 1e-12;
    let c = model.regularity_constants()?;
    if c.lambda_drift <= 0.0 {
        return Err(Error::ModelNotContractive("lambda_A <= 0".into()));
    }
    let mut x = Vector::zeros(model.dim());
    let mut fx = model.drift_unchecked(&x);
    for _ in 0..MAX_ITER {
        let res = fx.norm();
        if res <= RESIDUAL {
            return Ok(x);
        }
        let jinv = model.jacobian_unchecked(&x).inverse()?;
        let step = jinv.mul_vec_unchecked(&fx);
        let mut t = 1.0;
        loop {
            let mut cand = x.clone();
            cand.axpy(-t, &step);
            let fc = model.drift_unchecked(&cand);
            if fc.norm() < res || t < 1e-12 {
                x = cand;
                fx = fc;
                break;
            }
            t *= 0.5;
        }
    }
    if fx.norm() <= RESIDUAL {
        Ok(x)
    } else {
        Err(Error::NoFixedPoint(MAX_ITER))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::paths::stream_rng;
    use crate::linalg::{Mat, SymMat};

    fn neg_identity(d: usize, r1: f64) -> SignalModel {
        SignalModel::linear(Mat::identity(d).scaled(-1.0), SymMat::scaled_identity(d, r1)).unwrap()
    }

    #[test]
    fn noise_free_signal_is_exponential() {
        let m = neg_identity(2, 0.0);
        let dt = 1e-3;
        let bundle = PathBundle::zeros(dt, 1000, 2, 1);
        let path = simulate_signal(&m, &Vector::from_slice(&[1.0, 0.0]).unwrap(), &bundle).unwrap();
        assert_eq!(path.len(), 1001);
        let err = (path[1000][0] - (-1.0f64).exp()).abs();
        // Euler global error is O(dt)
        assert!(err < dt, "{err}");
        assert_eq!(path[1000][1], 0.0);
    }

    #[test]
    fn same_bundle_same_path() {
        let m = neg_identity(1, 1.0);
        let b = PathBundle::from_seed(0.01, 500, 1, 1, 5, 0).unwrap();
        let x0 = Vector::from_slice(&[0.3]).unwrap();
        let p1 = simulate_signal(&m, &x0, &b).unwrap();
        let p2 = simulate_signal(&m, &x0, &b).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn unstable_step_rejected() {
        let m = neg_identity(1, 1.0);
        // λ_∂A = 2, dt = 0.3 → 0.6 ≥ 0.5
        let b = PathBundle::zeros(0.3, 10, 1, 1);
        assert!(matches!(
            simulate_signal(&m, &Vector::zeros(1), &b),
            Err(Error::UnstableStep { .. })
        ));
    }

    #[test]
    fn ou_stationary_variance() {
        // dX = −X dt + dW: Var(X_T) = (1 − e^{−2T})/2 → 1/2, Euler bias 1/(2 − dt)
        let m = neg_identity(1, 1.0);
        let dt = 0.01;
        let n = 10_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for k in 0..n {
            let b = PathBundle::generate(dt, 1000, 1, 0, &mut stream_rng(17, k)).unwrap();
            let x = simulate_signal_recorded(&m, &Vector::zeros(1), &b, &Recording::At(vec![1000])).unwrap();
            acc += x[0][0];
            acc2 += x[0][0] * x[0][0];
        }
        let mean = acc / n as f64;
        let var = acc2 / n as f64 - mean * mean;
        // standard error of the variance ≈ 0.5·sqrt(2/n) ≈ 0.007
        assert!((var - 0.5).abs() < 0.025, "{var}");
    }

    #[test]
    fn flow_examples() {
        let m = neg_identity(2, 0.0);
        let x0 = Vector::from_slice(&[1.0, -2.0]).unwrap();
        let path = deterministic_flow(&m, &x0, 1e-3, 2.0).unwrap();
        let last = path.last().unwrap();
        let e = (-2.0f64).exp();
        assert!((last[0] - e).abs() < 1e-8 && (last[1] + 2.0 * e).abs() < 1e-8);

        let fixed = deterministic_flow(&m, &Vector::zeros(2), 0.01, 1.0).unwrap();
        assert!(fixed.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn flow_fourth_order() {
        let m = SignalModel::quadratic_cubic(
            SymMat::identity(1),
            Vector::from_slice(&[0.3]).unwrap(),
            SymMat::identity(1),
            1.0,
            SymMat::identity(1),
        )
        .unwrap();
        let x0 = Vector::from_slice(&[2.0]).unwrap();
        let reference = deterministic_flow(&m, &x0, 1e-4, 1.0).unwrap().pop().unwrap();
        let coarse = deterministic_flow(&m, &x0, 0.02, 1.0).unwrap().pop().unwrap();
        let fine = deterministic_flow(&m, &x0, 0.01, 1.0).unwrap().pop().unwrap();
        let e1 = (coarse[0] - reference[0]).abs();
        let e2 = (fine[0] - reference[0]).abs();
        assert!(e1 / e2 > 12.0, "order ratio {}", e1 / e2);
    }

    #[test]
    fn fixed_points() {
        assert_eq!(fixed_point(&neg_identity(3, 1.0)).unwrap().norm(), 0.0);
        let qc = |q: &[f64]| {
            SignalModel::quadratic_cubic(
                SymMat::identity(2),
                Vector::from_slice(q).unwrap(),
                SymMat::identity(2),
                1.0,
                SymMat::identity(2),
            )
            .unwrap()
        };
        assert_eq!(fixed_point(&qc(&[0.0, 0.0])).unwrap().norm(), 0.0);
        let m = qc(&[1.0, 0.0]);
        let x = fixed_point(&m).unwrap();
        assert!(m.drift(&x).unwrap().norm() < 1e-10);
        // x⋆ = −s e₁ with s + s² = 1
        let s = (5.0f64.sqrt() - 1.0) / 2.0;
        assert!((x[0] + s).abs() < 1e-10);
    }
}
