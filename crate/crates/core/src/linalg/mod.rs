//! Sparse linear algebra used by the discrete operators.

pub mod cg;
pub mod ordering;
pub mod skyline;

pub use cg::{pcg, CgOutcome};
pub use skyline::{Scalar, Skyline};

use num_complex::Complex64;
use sprs::{CsMat, TriMat};

/// `y = A x` for a CSR matrix.
pub fn spmv(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    spmv_into(a, x, &mut y);
    y
}

pub fn spmv_into(a: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    debug_assert!(a.is_csr());
    for (i, row) in a.outer_iterator().enumerate() {
        let mut s = 0.0;
        for (j, v) in row.iter() {
            s += v * x[j];
        }
        y[i] = s;
    }
}

/// `y = A x` for a real matrix acting on a complex vector.
pub fn spmv_c(a: &CsMat<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); a.rows()];
    for (i, row) in a.outer_iterator().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for (j, v) in row.iter() {
            s += x[j] * *v;
        }
        y[i] = s;
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `alpha A + beta B` as a complex matrix (same shape).
pub fn complex_combination(a: &CsMat<f64>, alpha: Complex64, b: &CsMat<f64>, beta: Complex64) -> CsMat<Complex64> {
    let mut t = TriMat::new((a.rows(), a.cols()));
    for (m, s) in [(a, alpha), (b, beta)] {
        for (i, row) in m.outer_iterator().enumerate() {
            for (j, v) in row.iter() {
                t.add_triplet(i, j, s * *v);
            }
        }
    }
    t.to_csr()
}

/// `alpha A + beta B` for real matrices.
pub fn real_combination(a: &CsMat<f64>, alpha: f64, b: &CsMat<f64>, beta: f64) -> CsMat<f64> {
    let mut t = TriMat::new((a.rows(), a.cols()));
    for (m, s) in [(a, alpha), (b, beta)] {
        for (i, row) in m.outer_iterator().enumerate() {
            for (j, v) in row.iter() {
                t.add_triplet(i, j, s * *v);
            }
        }
    }
    t.to_csr()
}

/// Symmetric part `(A + A^T) / 2`, also used to remove rounding asymmetry.
pub fn symmetrize(a: &CsMat<f64>) -> CsMat<f64> {
    let at = a.transpose_view().to_csr();
    real_combination(a, 0.5, &at, 0.5)
}
