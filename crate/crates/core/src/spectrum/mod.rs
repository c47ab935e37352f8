//! Leading Stokes eigenpairs, the flux direction `e = P e_z / ||P e_z||`, the
//! base flow `A w = e` and the constants built from them.
//!
//! All vectors are reduced coordinates in a [`DivFreeSpace`].

mod lanczos;

pub use lanczos::{smallest_eigenpairs, EigenOutput, Pencil};

use serde::Serialize;

use crate::error::{PerifluxError, Result};
use crate::fields::{DivFreeSpace, VectorField};
use crate::linalg::dot;

impl Pencil for DivFreeSpace {
    fn dim(&self) -> usize {
        DivFreeSpace::dim(self)
    }
    fn apply_k(&self, x: &[f64]) -> Vec<f64> {
        self.apply_stiffness(x)
    }
    fn apply_m(&self, x: &[f64]) -> Vec<f64> {
        self.apply_mass(x)
    }
    fn solve_k(&self, b: &[f64]) -> Vec<f64> {
        self.solve_stiffness(b)
    }
    fn solve_m(&self, b: &[f64]) -> Vec<f64> {
        self.solve_mass(b)
    }
}

pub const DEFAULT_MODES: usize = 64;
pub const DEFAULT_EIG_TOL: f64 = 1e-8;
const EIG_SEED: u64 = 0x5eed;

/// Stokes eigenpairs, ascending, orthonormal in the weighted L2 product.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub krylov_dim: usize,
}

pub fn eigenpairs(space: &DivFreeSpace, m: usize, tol: f64) -> Result<Eigenpairs> {
    let out = smallest_eigenpairs(space, m, tol, EIG_SEED)?;
    Ok(Eigenpairs {
        values: out.values,
        vectors: out.vectors,
        residuals: out.residuals,
        krylov_dim: out.krylov_dim,
    })
}

/// Reduced coordinates of `e` and `||P e_z||`.
pub fn flux_direction(space: &DivFreeSpace, tol: f64) -> Result<(Vec<f64>, f64)> {
    let (n2, mut x) = space.projected_axial();
    let n = n2.max(0.0).sqrt();
    if !(n > 10.0 * tol) {
        return Err(PerifluxError::DegenerateGeometry { norm: n });
    }
    x.iter_mut().for_each(|v| *v /= n);
    Ok((x, n))
}

/// `w` with `A w = e`, `C0^2 = ||w||^2` and `C1^2 = (w, e)`.
pub fn base_flow(space: &DivFreeSpace, pez_norm: f64) -> Result<(Vec<f64>, f64, f64)> {
    if !(pez_norm > 0.0) {
        return Err(PerifluxError::DegenerateGeometry { norm: pez_norm });
    }
    // C^T M e = kappa e_Q / ||P e_z||.
    let s = space.kappa() / pez_norm;
    let mut load = space.flux_load();
    load.iter_mut().for_each(|v| *v *= s);
    let w = space.solve_stiffness(&load);
    let c0sq = space.inner(&w, &w);
    let c1sq = s * space.flux(&w);
    Ok((w, c0sq, c1sq))
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub m: usize,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub e_field: Vec<f64>,
    pub pez_norm: f64,
    /// `(w_j, e)`.
    pub c_hat: Vec<f64>,
    pub w_flow: Vec<f64>,
    pub c0sq: f64,
    pub c1sq: f64,
    /// `<grad w, grad w>`, equal to `c1sq` up to rounding.
    pub c1sq_energy: f64,
    pub bar_e_norm_sq: f64,
}

impl SpectralBasis {
    pub fn compute(space: &DivFreeSpace, m: usize, tol: f64) -> Result<Self> {
        let eig = eigenpairs(space, m, tol)?;
        let (e, pez_norm) = flux_direction(space, tol)?;
        let (w, c0sq, c1sq) = base_flow(space, pez_norm)?;
        let s = space.kappa() / pez_norm;
        let c_hat: Vec<f64> = eig.vectors.iter().map(|x| s * space.flux(x)).collect();
        let bar_e_norm_sq = c_hat.iter().map(|c| c * c).sum();
        let c1sq_energy = space.energy(&w, &w);
        Ok(SpectralBasis {
            m,
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
            residuals: eig.residuals,
            e_field: e,
            pez_norm,
            c_hat,
            w_flow: w,
            c0sq,
            c1sq,
            c1sq_energy,
            bar_e_norm_sq,
        })
    }

    /// Flux direction and base flow only, without eigenpairs (`m = 0`).
    pub fn constants_only(space: &DivFreeSpace, tol: f64) -> Result<Self> {
        let (e, pez_norm) = flux_direction(space, tol)?;
        let (w, c0sq, c1sq) = base_flow(space, pez_norm)?;
        let c1sq_energy = space.energy(&w, &w);
        Ok(SpectralBasis {
            m: 0,
            eigenvalues: Vec::new(),
            eigenvectors: Vec::new(),
            residuals: Vec::new(),
            e_field: e,
            pez_norm,
            c_hat: Vec::new(),
            w_flow: w,
            c0sq,
            c1sq,
            c1sq_energy,
            bar_e_norm_sq: 0.0,
        })
    }

    /// `||e_bar||` using the first `m_prime` modes.
    pub fn bar_e_norm(&self, m_prime: usize) -> Result<f64> {
        if m_prime > self.m {
            return Err(PerifluxError::invalid("m'", format!("exceeds the basis size {}", self.m)));
        }
        Ok(self.c_hat[..m_prime].iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    /// Squared discrete Poincare constant `1 / lambda_1`.
    pub fn poincare_sq(&self) -> f64 {
        self.eigenvalues.first().map_or(f64::NAN, |l| 1.0 / l)
    }

    pub fn eigenfield(&self, space: &DivFreeSpace, j: usize) -> VectorField {
        space.field(&self.eigenvectors[j])
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self, space: &DivFreeSpace) -> f64 {
        let mv: Vec<Vec<f64>> = self.eigenvectors.iter().map(|x| space.apply_mass(x)).collect();
        let mut worst: f64 = 0.0;
        for (i, a) in mv.iter().enumerate() {
            for (j, b) in self.eigenvectors.iter().enumerate() {
                let d = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - d).abs());
            }
        }
        worst
    }

    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            m: self.m,
            eigenvalues: self.eigenvalues.clone(),
            residuals: self.residuals.clone(),
            c_hat: self.c_hat.clone(),
            pez_norm: self.pez_norm,
            c0sq: self.c0sq,
            c1sq: self.c1sq,
            bar_e_norm_sq: self.bar_e_norm_sq,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub m: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub c_hat: Vec<f64>,
    pub pez_norm: f64,
    pub c0sq: f64,
    pub c1sq: f64,
    pub bar_e_norm_sq: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, GeometryKind, MappedGrid, PipeProfile};
    use std::f64::consts::PI;

    fn grid(kind: GeometryKind, eps: f64, n: usize) -> MappedGrid {
        let p = if eps == 0.0 {
            PipeProfile::straight(1.0, 1.0).unwrap()
        } else {
            PipeProfile::sinusoidal(1.0, eps, 1.0).unwrap()
        };
        build_grid(&p, kind, n, n).unwrap()
    }

    #[test]
    fn straight_channel_first_mode_is_the_axial_profile() {
        let lam = |n: usize| {
            let s = DivFreeSpace::new(&grid(GeometryKind::Planar2D, 0.0, n)).unwrap();
            let e = eigenpairs(&s, 4, 1e-8).unwrap();
            assert!(e.residuals.iter().all(|r| *r <= 1e-8));
            e.values[0]
        };
        let exact = PI * PI / 4.0;
        let (a, b) = (lam(16), lam(32));
        assert!((a - exact).abs() / (b - exact).abs() > 3.5, "{a} {b}");
        assert!((b - exact).abs() < 1e-2);
    }

    #[test]
    fn basis_invariants_on_wavy_pipe() {
        for kind in [GeometryKind::Planar2D, GeometryKind::Axisym] {
            let s = DivFreeSpace::new(&grid(kind, 0.2, 16)).unwrap();
            let b = SpectralBasis::compute(&s, 12, 1e-8).unwrap();
            assert!(b.orthonormality_defect(&s) < 1e-10);
            assert!(b.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            for (j, x) in b.eigenvectors.iter().enumerate() {
                let r = s.energy(x, x);
                assert!((r - b.eigenvalues[j]).abs() < 1e-9 * r);
            }
            assert!(b.pez_norm > 0.0 && b.pez_norm < 1.0);
            assert!((s.inner(&b.e_field, &b.e_field) - 1.0).abs() < 1e-12);
            assert!((b.c1sq - b.c1sq_energy).abs() < 1e-10 * b.c1sq);
            assert!(b.bar_e_norm_sq < 1.0 - 1e-12);
            let mut prev = 0.0;
            for k in 0..=b.m {
                let v = b.bar_e_norm(k).unwrap();
                assert!(v >= prev);
                prev = v;
            }
            assert!(b.c0sq <= b.c1sq * b.poincare_sq() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn straight_channel_constants() {
        let s = DivFreeSpace::new(&grid(GeometryKind::Planar2D, 0.0, 32)).unwrap();
        let (_, n) = flux_direction(&s, 1e-10).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        let (_, _, c1sq) = base_flow(&s, n).unwrap();
        assert!((c1sq - 1.0 / 3.0).abs() < 1e-3, "{c1sq}");
    }
}
