use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::potentials::{PairPotential, SitePotential};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{
    max_eigenvalue, min_eigenvalue, spectral_norm, sym_spectral_abscissa, sym_sqrt, Mat, SymMat,
    Vector,
};

/// Below this value of `⟨Q₂x,x⟩` the cubic terms of the Hessian are dropped.
pub const CUBIC_SINGULARITY_CUTOFF: f64 = 1e-14;

/// Interacting gradient flow `V(x) = Σᵢ U₁(xᵢ) + Σ_{i≠j} U₂(xᵢ,xⱼ)` together
/// with the user-certified convexity and Lipschitz constants of `U₁`, `U₂`.
#[derive(Clone, Debug)]
pub struct InteractingPotential {
    pub site_convexity: f64,
    pub pair_convexity: f64,
    pub site_lipschitz: f64,
    pub pair_lipschitz: f64,
    pub beta: f64,
    pub site: Arc<dyn SitePotential>,
    pub pair: Arc<dyn PairPotential>,
}

/// Drift families `A : ℝʳ → ℝʳ`.
#[derive(Clone, Debug)]
pub enum Drift {
    /// `A(x) = A x`.
    Linear(Mat),
    /// `A = −β ∂V` with `V(x) = ½⟨Q₁x,x⟩ + ⟨q,x⟩ + ⅓⟨Q₂x,x⟩^{3/2}`.
    QuadraticCubic {
        q1: SymMat,
        q: Vector,
        q2: SymMat,
        beta: f64,
    },
    Interacting(InteractingPotential),
    /// `z ↦ T A(T⁻¹ z)`, produced by the canonical change of basis.
    Conjugated {
        inner: Box<Drift>,
        map: Mat,
        map_inv: Mat,
    },
}

/// Constants of the logarithmic-norm and Lipschitz conditions on `∂A`, and
/// the one-sided monotonicity constant of `A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityConstants {
    pub lambda_jac: f64,
    pub kappa_jac: f64,
    pub lambda_drift: f64,
}

/// Signal `dX = A(X) dt + R₁^{1/2} dW`.
#[derive(Clone, Debug)]
pub struct SignalModel {
    drift: Drift,
    dim: usize,
    r1: SymMat,
    r1_sqrt: SymMat,
}

impl SignalModel {
    pub fn linear(a: Mat, r1: SymMat) -> Result<Self> {
        if !a.is_square() {
            return Err(dim_mismatch("square drift matrix", format!("{}x{}", a.rows(), a.cols())));
        }
        let dim = a.rows();
        Self::build(Drift::Linear(a), dim, r1)
    }

    pub fn quadratic_cubic(q1: SymMat, q: Vector, q2: SymMat, beta: f64, r1: SymMat) -> Result<Self> {
        let dim = q1.dim();
        q.check_dim(dim)?;
        if q2.dim() != dim {
            return Err(dim_mismatch(dim, q2.dim()));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        if !q1.is_positive_definite() {
            return Err(Error::ModelNotContractive("Q1 is not positive definite".into()));
        }
        if !q2.is_positive_definite() {
            return Err(Error::NotPd);
        }
        Self::build(Drift::QuadraticCubic { q1, q, q2, beta }, dim, r1)
    }

    pub fn interacting(dim: usize, potential: InteractingPotential, r1: SymMat) -> Result<Self> {
        if !(potential.beta > 0.0) {
            return Err(Error::InvalidArgument("beta must be positive".into()));
        }
        if potential.site_lipschitz < 0.0 || potential.pair_lipschitz < 0.0 {
            return Err(Error::InvalidArgument("Lipschitz constants must be nonnegative".into()));
        }
        Self::build(Drift::Interacting(potential), dim, r1)
    }

    pub(crate) fn build(drift: Drift, dim: usize, r1: SymMat) -> Result<Self> {
        if dim == 0 {
            return Err(dim_mismatch("r1 >= 1", 0));
        }
        if r1.dim() != dim {
            return Err(dim_mismatch(dim, r1.dim()));
        }
        let r1_sqrt = sym_sqrt(&r1)?;
        Ok(Self {
            drift,
            dim,
            r1,
            r1_sqrt,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift_family(&self) -> &Drift {
        &self.drift
    }

    /// Signal noise covariance `R₁`.
    pub fn r1(&self) -> &SymMat {
        &self.r1
    }

    pub fn r1_sqrt(&self) -> &SymMat {
        &self.r1_sqrt
    }

    /// Same drift, different noise covariance.
    pub fn with_noise(&self, r1: SymMat) -> Result<Self> {
        Self::build(self.drift.clone(), self.dim, r1)
    }

    /// `A(x)`.
    pub fn drift(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim)?;
        Ok(self.drift.eval(x))
    }

    /// `∂A(x)`.
    pub fn drift_jacobian(&self, x: &Vector) -> Result<Mat> {
        x.check_dim(self.dim)?;
        Ok(self.drift.jacobian(x))
    }

    pub(crate) fn drift_unchecked(&self, x: &Vector) -> Vector {
        self.drift.eval(x)
    }

    pub(crate) fn jacobian_unchecked(&self, x: &Vector) -> Mat {
        self.drift.jacobian(x)
    }

    pub fn regularity_constants(&self) -> Result<RegularityConstants> {
        self.drift.regularity(self.dim)
    }

    /// Whether `∂A` is symmetric by construction (gradient flows).
    pub fn is_gradient_flow(&self) -> bool {
        self.drift.is_gradient()
    }
}

impl Drift {
    fn is_gradient(&self) -> bool {
        match self {
            Drift::Linear(_) => false,
            Drift::QuadraticCubic { .. } | Drift::Interacting(_) => true,
            Drift::Conjugated { inner, .. } => inner.is_gradient(),
        }
    }

    fn eval(&self, x: &Vector) -> Vector {
        match self {
            Drift::Linear(a) => a.mul_vec_unchecked(x),
            Drift::QuadraticCubic { q1, q, q2, beta } => {
                let q2x = q2.as_mat().mul_vec_unchecked(x);
                let s = q2x.dot(x).max(0.0).sqrt();
                let mut g = q1.as_mat().mul_vec_unchecked(x);
                g.axpy(1.0, q);
                g.axpy(s, &q2x);
                g.scaled(-beta)
            }
            Drift::Interacting(p) => {
                let n = x.dim();
                let xs = x.as_slice();
                let mut g: Vec<f64> = xs.iter().map(|&v| p.site.grad(v)).collect();
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        // term U₂(xᵢ, xⱼ) feeds coordinates i and j
                        let gr = p.pair.grad(xs[i], xs[j]);
                        g[i] += gr[0];
                        g[j] += gr[1];
                    }
                }
                Vector::from_vec_unchecked(g.into_iter().map(|v| -p.beta * v).collect())
            }
            Drift::Conjugated { inner, map, map_inv } => {
                let y = map_inv.mul_vec_unchecked(x);
                map.mul_vec_unchecked(&inner.eval(&y))
            }
        }
    }

    fn jacobian(&self, x: &Vector) -> Mat {
        match self {
            Drift::Linear(a) => a.clone(),
            Drift::QuadraticCubic { q1, q2, beta, .. } => {
                let n = x.dim();
                let q2x = q2.as_mat().mul_vec_unchecked(x);
                let s2 = q2x.dot(x);
                let mut h = Mat::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let mut v = q1.get(i, j);
                        if s2 >= CUBIC_SINGULARITY_CUTOFF {
                            let s = s2.sqrt();
                            v += s * q2.get(i, j) + q2x[i] * q2x[j] / s;
                        }
                        h.set(i, j, -beta * v);
                        h.set(j, i, -beta * v);
                    }
                }
                h
            }
            Drift::Interacting(p) => {
                let n = x.dim();
                let xs = x.as_slice();
                let mut h = Mat::zeros(n, n);
                for i in 0..n {
                    h.set(i, i, p.site.hess(xs[i]));
                }
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let hp = p.pair.hess(xs[i], xs[j]);
                        h.set(i, i, h.get(i, i) + hp[0][0]);
                        h.set(j, j, h.get(j, j) + hp[1][1]);
                        h.set(i, j, h.get(i, j) + hp[0][1]);
                        h.set(j, i, h.get(j, i) + hp[1][0]);
                    }
                }
                // enforce exact symmetry
                for i in 0..n {
                    for j in i + 1..n {
                        let v = 0.5 * (h.get(i, j) + h.get(j, i));
                        h.set(i, j, v);
                        h.set(j, i, v);
                    }
                }
                h.scaled(-p.beta)
            }
            Drift::Conjugated { inner, map, map_inv } => {
                let y = map_inv.mul_vec_unchecked(x);
                let j = inner.jacobian(&y);
                let out = map.mul_mat_unchecked(&j).mul_mat_unchecked(map_inv);
                if inner.is_gradient() && is_orthogonal_up_to_scale(map).is_some() {
                    SymMat::symmetrize(&out).map(SymMat::into_mat).unwrap_or(out)
                } else {
                    out
                }
            }
        }
    }

    fn regularity(&self, dim: usize) -> Result<RegularityConstants> {
        match self {
            Drift::Linear(a) => {
                let abscissa = sym_spectral_abscissa(a)?;
                if abscissa >= 0.0 {
                    return Err(Error::ModelNotContractive(format!(
                        "lambda_max(A + A') = {abscissa} >= 0"
                    )));
                }
                Ok(RegularityConstants {
                    lambda_jac: -abscissa,
                    kappa_jac: 0.0,
                    lambda_drift: -abscissa / 2.0,
                })
            }
            Drift::QuadraticCubic { q1, q2, beta, .. } => {
                let lmin = min_eigenvalue(q1)?;
                if lmin <= 0.0 {
                    return Err(Error::ModelNotContractive("Q1 is not positive definite".into()));
                }
                let lmax2 = max_eigenvalue(q2)?;
                let lambda_jac = beta * 0.5 * lmin;
                Ok(RegularityConstants {
                    lambda_jac,
                    kappa_jac: beta * 2.0 * lmax2.powf(1.5),
                    lambda_drift: lambda_jac / 2.0,
                })
            }
            Drift::Interacting(p) => {
                let m = (dim - 1) as f64;
                let v = p.site_convexity + m * p.pair_convexity;
                if v <= 0.0 {
                    return Err(Error::ModelNotContractive(format!(
                        "u1 + (r1 - 1) u2 = {v} <= 0"
                    )));
                }
                let lambda_jac = p.beta * v / 2.0;
                Ok(RegularityConstants {
                    lambda_jac,
                    kappa_jac: p.beta * (p.site_lipschitz + p.pair_lipschitz * m * (2.0 * m).sqrt()),
                    lambda_drift: lambda_jac / 2.0,
                })
            }
            Drift::Conjugated { inner, map, .. } => {
                let scale = is_orthogonal_up_to_scale(map).ok_or_else(|| {
                    Error::ModelNotContractive(
                        "regularity constants do not transfer through a non-conformal change of basis"
                            .into(),
                    )
                })?;
                let c = inner.regularity(dim)?;
                Ok(RegularityConstants {
                    kappa_jac: c.kappa_jac / scale,
                    ..c
                })
            }
        }
    }
}

/// Returns `s` when `MᵀM = s² I` (to 1e-10 relative).
fn is_orthogonal_up_to_scale(m: &Mat) -> Option<f64> {
    let g = m.transpose().mul_mat_unchecked(m);
    let n = m.rows();
    let s2 = g.trace() / n as f64;
    if s2 <= 0.0 {
        return None;
    }
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { s2 } else { 0.0 };
            if (g.get(i, j) - want).abs() > 1e-10 * s2 {
                return None;
            }
        }
    }
    Some(s2.sqrt())
}

/// Largest sampled ratio `‖∂A(x) − ∂A(y)‖₂ / ‖x − y‖` over pairs drawn
/// uniformly in the ball of the given radius.
pub fn lipschitz_empirical_check<R: Rng + ?Sized>(
    model: &SignalModel,
    n_samples: usize,
    radius: f64,
    rng: &mut R,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    let d = model.dim();
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let x = sample_ball(d, radius, rng);
        let y = sample_ball(d, radius, rng);
        let gap = x.dist_sq(&y).sqrt();
        if gap == 0.0 {
            continue;
        }
        let diff = model
            .jacobian_unchecked(&x)
            .sub(&model.jacobian_unchecked(&y))?;
        worst = worst.max(spectral_norm(&diff)? / gap);
    }
    Ok(worst)
}

/// Uniform draw from the Euclidean ball of radius `radius` in ℝᵈ.
pub fn sample_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Vector {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let r = radius * u.powf(1.0 / d as f64);
        return Vector::from_vec_unchecked(g.into_iter().map(|v| v * r / norm).collect());
    }
}
