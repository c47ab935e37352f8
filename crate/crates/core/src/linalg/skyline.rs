//! Envelope (skyline) LDL^T factorization for symmetric sparse matrices.
//!
//! Works for real symmetric and complex symmetric (not Hermitian) matrices; no
//! pivoting, so the matrix must be factorizable in the given order. Every
//! matrix factored here is either SPD or has an SPD real part.

use num_complex::Complex64;
use sprs::CsMat;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use super::ordering::rcm_ordering;
use crate::error::{PerifluxError, Result};

pub trait Scalar:
    Copy
    + Send
    + Sync
    + std::fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let mut s2 = T::zero();
    let mut s3 = T::zero();
    let n = a.len().min(b.len());
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    for k in 4 * chunks..n {
        s0 += a[k] * b[k];
    }
    (s0 + s1) + (s2 + s3)
}

/// Factored matrix `P A P^T = L D L^T` with `L` stored row-wise over its envelope.
#[derive(Debug, Clone)]
pub struct Skyline<T: Scalar> {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    lower: Vec<T>,
    diag: Vec<T>,
}

impl<T: Scalar> Skyline<T> {
    /// Factors a symmetric matrix (both triangles stored) in the given row order.
    pub fn factor_with_perm(a: &CsMat<T>, perm: Vec<usize>, context: &str) -> Result<Self>
    where
        T: Default,
    {
        let n = a.rows();
        assert_eq!(a.cols(), n);
        assert_eq!(perm.len(), n);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let a = a.to_csr();
        // Envelope of the permuted lower triangle.
        let mut first: Vec<usize> = (0..n).collect();
        for (old_r, row) in a.outer_iterator().enumerate() {
            let r = inv[old_r];
            for (old_c, _) in row.iter() {
                let c = inv[old_c];
                if c < r {
                    first[r] = first[r].min(c);
                } else if r < c {
                    first[c] = first[c].min(r);
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut lower = vec![T::zero(); start[n]];
        let mut diag = vec![T::zero(); n];
        for (old_r, row) in a.outer_iterator().enumerate() {
            let r = inv[old_r];
            for (old_c, &v) in row.iter() {
                let c = inv[old_c];
                if r == c {
                    diag[r] += v;
                } else if c < r {
                    lower[start[r] + c - first[r]] += v;
                }
            }
        }
        let mut sky = Skyline {
            n,
            perm,
            first,
            start,
            lower,
            diag,
        };
        sky.factorize(context)?;
        Ok(sky)
    }

    pub fn factor(a: &CsMat<T>, context: &str) -> Result<Self>
    where
        T: Default,
    {
        let perm = rcm_ordering(&a.to_csr());
        Self::factor_with_perm(a, perm, context)
    }

    fn factorize(&mut self, context: &str) -> Result<()> {
        let n = self.n;
        let scale = self
            .diag
            .iter()
            .map(|d| d.modulus())
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            // Row i holds A_ij; turn it into u_ij = L_ij D_j, then L_ij.
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let s = if k0 < j {
                    let (head, tail) = self.lower.split_at(si);
                    let row_i = &tail[k0 - fi..j - fi];
                    let sj = self.start[j];
                    let row_j = &head[sj + k0 - fj..sj + j - fj];
                    dot(row_i, row_j)
                } else {
                    T::zero()
                };
                self.lower[si + j - fi] -= s;
            }
            let mut d = self.diag[i];
            for j in fi..i {
                let u = self.lower[si + j - fi];
                let l = u / self.diag[j];
                d -= u * l;
                self.lower[si + j - fi] = l;
            }
            if !(d.modulus() > 1e-14 * scale) || !d.is_finite() {
                return Err(PerifluxError::SolverFailure {
                    context: format!("{context}: factorization broke down at pivot {i}"),
                    residual: d.modulus(),
                    iterations: i,
                });
            }
            self.diag[i] = d;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.start[self.n]
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        // Forward: L y = b.
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            let s = dot(&self.lower[si..si + i - fi], &y[fi..i]);
            y[i] -= s;
        }
        for i in 0..n {
            y[i] = y[i] / self.diag[i];
        }
        // Backward: L^T x = y, column sweep.
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.start[i];
            let yi = y[i];
            let row = &self.lower[si..si + i - fi];
            for (k, l) in row.iter().enumerate() {
                let v = *l * yi;
                y[fi + k] -= v;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    pub fn diag_values(&self) -> &[T] {
        &self.diag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use sprs::TriMat;

    fn random_spd(n: usize, seed: u64) -> CsMat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = TriMat::new((n, n));
        for i in 0..n {
            t.add_triplet(i, i, 4.0 + rng.gen::<f64>());
            for &off in &[1usize, 7, n - 1] {
                let j = (i + off) % n;
                if j != i {
                    let v = rng.gen::<f64>() * 0.5 - 0.25;
                    t.add_triplet(i, j, v);
                    t.add_triplet(j, i, v);
                }
            }
        }
        t.to_csr()
    }

    fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; a.rows()];
        for (i, row) in a.outer_iterator().enumerate() {
            for (j, v) in row.iter() {
                y[i] += v * x[j];
            }
        }
        y
    }

    #[test]
    fn solves_random_spd() {
        let a = random_spd(60, 3);
        let f = Skyline::factor(&a, "test").unwrap();
        let x0: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = matvec(&a, &x0);
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x0) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_symmetric_solve() {
        let a = random_spd(40, 5);
        let n = 40;
        let mut t = TriMat::new((n, n));
        for (i, row) in a.outer_iterator().enumerate() {
            for (j, v) in row.iter() {
                t.add_triplet(i, j, Complex64::new(*v, if i == j { 2.0 } else { 0.0 }));
            }
        }
        let ac: CsMat<Complex64> = t.to_csr();
        let f = Skyline::factor(&ac, "test").unwrap();
        let x0: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for (i, row) in ac.outer_iterator().enumerate() {
            for (j, v) in row.iter() {
                b[i] += v * x0[j];
            }
        }
        let x = f.solve(&b);
        for (u, v) in x.iter().zip(&x0) {
            assert!((u - v).norm() < 1e-11);
        }
    }

    #[test]
    fn singular_matrix_reported() {
        let mut t = TriMat::new((2, 2));
        t.add_triplet(0, 0, 1.0);
        t.add_triplet(0, 1, 1.0);
        t.add_triplet(1, 0, 1.0);
        t.add_triplet(1, 1, 1.0);
        let a: CsMat<f64> = t.to_csr();
        assert!(matches!(
            Skyline::factor_with_perm(&a, vec![0, 1], "s"),
            Err(PerifluxError::SolverFailure { .. })
        ));
    }
}
