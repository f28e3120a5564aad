//! Small dense real linear algebra: vectors, general and symmetric matrices,
//! and the spectral quantities the stability constants are built from.

mod eigen;
mod matrix;
mod vector;

pub use eigen::{
    max_eigenvalue, min_eigenvalue, psd_project, spectral_norm, sym_eigen, sym_inverse,
    sym_spectral_abscissa, sym_sqrt, SymEigen, JACOBI_TOLERANCE, PSD_TOLERANCE,
};
pub use matrix::{frobenius_inner, frobenius_norm, Mat, SymMat};
pub use vector::Vector;
