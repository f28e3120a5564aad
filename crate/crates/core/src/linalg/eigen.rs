//! Cyclic Jacobi eigensolver for small dense symmetric matrices, and the
//! spectral helpers built on it.

use super::{Mat, SymMat};
use crate::error::{dim_mismatch, Error, Result};

/// Off-diagonal Frobenius norm (relative to the full norm) at which a sweep stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues below zero but above `-PSD_TOLERANCE` count as zero.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Eigen-decomposition `M = V diag(values) Vᵀ`, eigenvalues ascending and
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEigen {
    /// Rebuilds `V diag(f(λ)) Vᵀ`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|k| v.get(i, k) * mapped[k] * v.get(j, k)).sum();
                out.set(i, j, s);
                out.set(j, i, s);
            }
        }
        SymMat::from_mat_unchecked(out)
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }
}

fn off_diagonal_sq(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += a[i * n + j] * a[i * n + j];
        }
    }
    2.0 * s
}

/// Diagonalises a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigen(m: &SymMat) -> Result<SymEigen> {
    if !m.is_finite() {
        return Err(Error::InvalidMatrix);
    }
    let n = m.dim();
    let mut a = m.as_mat().as_slice().to_vec();
    let mut v = Mat::identity(n).as_slice().to_vec();
    let total: f64 = a.iter().map(|x| x * x).sum();
    let target = (JACOBI_TOLERANCE * JACOBI_TOLERANCE) * total;

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_sq(&a, n);
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- A J
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                // A <- Jᵀ A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v[row * n + src]);
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Largest eigenvalue `ρ(M)` of a symmetric matrix.
pub fn max_eigenvalue(m: &SymMat) -> Result<f64> {
    if m.dim() == 1 {
        let v = m.get(0, 0);
        return if v.is_finite() { Ok(v) } else { Err(Error::InvalidMatrix) };
    }
    Ok(sym_eigen(m)?.max())
}

pub fn min_eigenvalue(m: &SymMat) -> Result<f64> {
    if m.dim() == 1 {
        let v = m.get(0, 0);
        return if v.is_finite() { Ok(v) } else { Err(Error::InvalidMatrix) };
    }
    Ok(sym_eigen(m)?.min())
}

/// `λ_max(M + Mᵀ)` of a square matrix (no factor one half).
pub fn sym_spectral_abscissa(m: &Mat) -> Result<f64> {
    if !m.is_square() {
        return Err(dim_mismatch(
            "square",
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    let n = m.rows();
    let mut s = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s.set(i, j, m.get(i, j) + m.get(j, i));
        }
    }
    max_eigenvalue(&SymMat::from_mat_unchecked(s))
}

/// Nearest positive semidefinite matrix in Frobenius norm (negative
/// eigenvalues clipped to zero). Positive definite input is returned as is.
pub fn psd_project(m: &SymMat) -> Result<SymMat> {
    if !m.is_finite() {
        return Err(Error::InvalidMatrix);
    }
    if m.is_positive_definite() {
        return Ok(m.clone());
    }
    let eig = sym_eigen(m)?;
    if eig.min() >= 0.0 {
        return Ok(m.clone());
    }
    Ok(eig.reassemble(|l| l.max(0.0)))
}

/// Principal square root of a positive semidefinite matrix.
pub fn sym_sqrt(m: &SymMat) -> Result<SymMat> {
    let eig = sym_eigen(m)?;
    if eig.min() < -PSD_TOLERANCE {
        return Err(Error::NotPsd(eig.min()));
    }
    Ok(eig.reassemble(|l| l.max(0.0).sqrt()))
}

/// Inverse of a symmetric positive definite matrix.
pub fn sym_inverse(m: &SymMat) -> Result<SymMat> {
    let eig = sym_eigen(m)?;
    let scale = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if eig.min() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPd);
    }
    Ok(eig.reassemble(|l| 1.0 / l))
}

/// Operator 2-norm `sqrt(λ_max(MᵀM))`.
pub fn spectral_norm(m: &Mat) -> Result<f64> {
    let mtm = m.transpose().mul_mat_unchecked(m);
    let gram = SymMat::symmetrize(&mtm)?;
    Ok(max_eigenvalue(&gram)?.max(0.0).sqrt())
}
