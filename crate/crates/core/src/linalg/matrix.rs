use serde::{Deserialize, Serialize};

use super::Vector;
use crate::error::{dim_mismatch, Error, Result};

/// Dense real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = *v;
        }
        m.check_finite()?;
        Ok(m)
    }

    /// Builds from row slices; all rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(dim_mismatch("non-empty matrix", format!("{r}x{c}")));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(dim_mismatch(c, row.len()));
            }
            data.extend_from_slice(row);
        }
        let m = Self {
            rows: r,
            cols: c,
            data,
        };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_mismatch(rows * cols, data.len()));
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidMatrix)
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.cols)?;
        Ok(self.mul_vec_unchecked(x))
    }

    pub(crate) fn mul_vec_unchecked(&self, x: &Vector) -> Vector {
        let xs = x.as_slice();
        let out = self
            .data
            .chunks(self.cols)
            .map(|row| row.iter().zip(xs).map(|(a, b)| a * b).sum())
            .collect();
        Vector::from_vec_unchecked(out)
    }

    pub fn mul_mat(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(dim_mismatch(
                format!("{}x_", self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(self.mul_mat_unchecked(other))
    }

    pub(crate) fn mul_mat_unchecked(&self, other: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scaled(&self, s: f64) -> Mat {
        Mat::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * s).collect(),
        )
    }

    pub(crate) fn zip_with(&self, other: &Mat, f: impl Fn(f64, f64) -> f64) -> Mat {
        Mat::from_raw(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }

    pub(crate) fn check_same_shape(&self, other: &Mat) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(dim_mismatch(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(())
    }

    /// Symmetric part `(M + Mᵀ)/2`.
    pub fn sym_part(&self) -> Result<SymMat> {
        if !self.is_square() {
            return Err(dim_mismatch("square", format!("{}x{}", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut s = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                s.data[i * n + j] = 0.5 * (self.get(i, j) + self.get(j, i));
            }
        }
        Ok(SymMat::from_mat_unchecked(s))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(dim_mismatch("square", format!("{}x{}", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a.get(p, col).abs().total_cmp(&a.get(q, col).abs()))
                .unwrap_or(col);
            if a.get(pivot, col).abs() <= 1e-13 * scale {
                return Err(Error::NotPd);
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a.get(col, col);
            for j in 0..n {
                a.data[col * n + j] /= p;
                inv.data[col * n + j] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.data[r * n + j] -= f * a.data[col * n + j];
                    inv.data[r * n + j] -= f * inv.data[col * n + j];
                }
            }
        }
        Ok(inv)
    }
}

impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Mat::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Symmetric matrix; both triangles are stored and kept equal.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat(Mat);

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        Self(Mat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Mat::identity(dim))
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Ok(Self(Mat::diag(values)?))
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        Self(Mat::identity(dim).scaled(s))
    }

    /// Takes the upper triangle of a square matrix as authoritative and mirrors it.
    pub fn from_upper(m: &Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(dim_mismatch("square", format!("{}x{}", m.rows(), m.cols())));
        }
        if !m.is_finite() {
            return Err(Error::InvalidMatrix);
        }
        let n = m.rows();
        let mut s = m.clone();
        for i in 0..n {
            for j in 0..i {
                s.set(i, j, m.get(j, i));
            }
        }
        Ok(Self(s))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_upper(&Mat::from_rows(rows)?)
    }

    pub(crate) fn from_mat_unchecked(m: Mat) -> Self {
        Self(m)
    }

    /// Averages the two triangles of an arbitrary square matrix.
    pub fn symmetrize(m: &Mat) -> Result<Self> {
        m.sym_part()
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn mul_vec(&self, x: &Vector) -> Result<Vector> {
        self.0.mul_vec(x)
    }

    /// `xᵀ M x`
    pub fn quad_form(&self, x: &Vector) -> f64 {
        self.0.mul_vec_unchecked(x).dot(x)
    }

    pub fn scaled(&self, s: f64) -> SymMat {
        SymMat(self.0.scaled(s))
    }

    pub fn add(&self, other: &SymMat) -> Result<SymMat> {
        Ok(SymMat(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &SymMat) -> Result<SymMat> {
        Ok(SymMat(self.0.sub(&other.0)?))
    }

    /// Returns the Cholesky factor when the matrix is strictly positive definite.
    pub fn cholesky(&self) -> Option<Mat> {
        let n = self.dim();
        let mut l = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if !(d > 0.0) {
                return None;
            }
            let djj = d.sqrt();
            l.set(j, j, djj);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / djj);
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }
}

impl Serialize for SymMat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = Mat::deserialize(d)?;
        SymMat::from_upper(&m).map_err(serde::de::Error::custom)
    }
}

/// `⟨P, Q⟩ = tr(PᵀQ)`.
pub fn frobenius_inner(p: &Mat, q: &Mat) -> Result<f64> {
    p.check_same_shape(q)?;
    Ok(p.as_slice().iter().zip(q.as_slice()).map(|(a, b)| a * b).sum())
}

pub fn frobenius_norm(p: &Mat) -> f64 {
    p.as_slice().iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_examples() {
        let i2 = Mat::identity(2);
        assert_eq!(frobenius_inner(&i2, &i2).unwrap(), 2.0);
        let a = Mat::diag(&[1.0, 2.0]).unwrap();
        let b = Mat::diag(&[3.0, 4.0]).unwrap();
        assert_eq!(frobenius_inner(&a, &b).unwrap(), 11.0);
        let c = Mat::zeros(2, 3);
        assert!(matches!(
            frobenius_inner(&a, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn frobenius_matches_elementwise_products() {
        let p = Mat::from_rows(&[vec![0.3, -1.2, 2.0], vec![4.0, 0.5, -0.7]]).unwrap();
        let q = Mat::from_rows(&[vec![1.1, 0.2, -0.4], vec![-2.0, 3.0, 0.9]]).unwrap();
        let mut expected = 0.0;
        for i in 0..2 {
            for j in 0..3 {
                expected += p.get(i, j) * q.get(i, j);
            }
        }
        // tr(PᵀQ) computed through the product as a second route
        let via_trace = p.transpose().mul_mat(&q).unwrap().trace();
        let got = frobenius_inner(&p, &q).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - via_trace).abs() < 1e-14);
    }

    #[test]
    fn upper_triangle_is_authoritative() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![99.0, 3.0]]).unwrap();
        let s = SymMat::from_upper(&m).unwrap();
        assert_eq!(s.get(1, 0), 2.0);
        assert_eq!(s.get(0, 1), 2.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Mat::from_rows(&[vec![f64::NAN]]),
            Err(Error::InvalidMatrix)
        ));
        assert!(Vector::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let m = Mat::from_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]).unwrap();
        let inv = m.inverse().unwrap();
        let id = m.mul_mat(&inv).unwrap();
        assert!(frobenius_norm(&id.sub(&Mat::identity(2)).unwrap()) < 1e-14);
        let sing = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(sing.inverse().is_err());
    }

    #[test]
    fn cholesky_detects_definiteness() {
        assert!(SymMat::identity(3).is_positive_definite());
        assert!(!SymMat::diag(&[1.0, 0.0]).unwrap().is_positive_definite());
        assert!(!SymMat::diag(&[1.0, -1.0]).unwrap().is_positive_definite());
    }
}
