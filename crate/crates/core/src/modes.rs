//! Per-harmonic coupled systems in eigenbasis coordinates.
//!
//! For harmonic `k` with `omega = 2 pi k / T`, the unknowns are
//! `X = (lambda_j alpha_j, lambda_j beta_j)` and the system reads
//!
//! ```text
//!  nu M X1 + omega L^-1 X2 =  omega s q c
//! -omega L^-1 X1 + nu M X2 = -omega s p c
//! ```
//!
//! with `M = I - c c^T`, `c_j = (w_j, e)`, `L = diag(lambda)` and
//! `s = kappa / ||P e_z||`. With `Z = X1 - i X2` this is the complex symmetric
//! system `(nu M + i omega L^-1) Z = i omega s (p - i q) c`, solved by
//! Sherman-Morrison.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{PerifluxError, Result};
use crate::fields::DivFreeSpace;
use crate::spectrum::SpectralBasis;

#[derive(Debug, Clone)]
pub struct ModeSystem {
    pub k: usize,
    pub nu: f64,
    pub period: f64,
    /// Axial period over the raw cell measure.
    pub kappa: f64,
    pub pez_norm: f64,
    pub c_hat: Vec<f64>,
    pub lambda: Vec<f64>,
    pub p: f64,
    pub q: f64,
}

impl ModeSystem {
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.k as f64 / self.period
    }

    fn scale(&self) -> f64 {
        self.kappa / self.pez_norm
    }

    pub fn m(&self) -> usize {
        self.lambda.len()
    }

    /// `M = I - c c^T`.
    pub fn m_matrix(&self) -> DMatrix<f64> {
        let m = self.m();
        let c = DVector::from_column_slice(&self.c_hat);
        DMatrix::identity(m, m) - &c * c.transpose()
    }

    /// The real `2m x 2m` matrix acting on `X`.
    pub fn block_matrix(&self) -> DMatrix<f64> {
        let m = self.m();
        let w = self.omega();
        let mm = self.m_matrix() * self.nu;
        let mut a = DMatrix::zeros(2 * m, 2 * m);
        a.view_mut((0, 0), (m, m)).copy_from(&mm);
        a.view_mut((m, m), (m, m)).copy_from(&mm);
        for j in 0..m {
            a[(j, m + j)] = w / self.lambda[j];
            a[(m + j, j)] = -w / self.lambda[j];
        }
        a
    }

    pub fn rhs(&self) -> DVector<f64> {
        let m = self.m();
        let f = self.omega() * self.scale();
        DVector::from_fn(2 * m, |i, _| {
            if i < m {
                f * self.q * self.c_hat[i]
            } else {
                -f * self.p * self.c_hat[i - m]
            }
        })
    }
}

pub fn assemble_mode(
    basis: &SpectralBasis,
    k: usize,
    nu: f64,
    period: f64,
    kappa: f64,
    p: f64,
    q: f64,
) -> Result<ModeSystem> {
    if k < 1 {
        return Err(PerifluxError::invalid("k", "harmonic index must be at least 1"));
    }
    for (name, v) in [("nu", nu), ("T", period), ("L", kappa), ("Pe_z_norm", basis.pez_norm)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(PerifluxError::invalid(name, "must be positive"));
        }
    }
    if !(p.is_finite() && q.is_finite()) {
        return Err(PerifluxError::invalid("p_k, q_k", "must be finite"));
    }
    Ok(ModeSystem {
        k,
        nu,
        period,
        kappa,
        pez_norm: basis.pez_norm,
        c_hat: basis.c_hat.clone(),
        lambda: basis.eigenvalues.clone(),
        p,
        q,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSolution {
    pub k: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Relative residual of the `2m` system.
    pub residual: f64,
    /// `(a_k, e)` and `(b_k, e)`.
    pub flux_a: f64,
    pub flux_b: f64,
    /// Deviation of the above from `kappa p / ||P e_z||` and `kappa q / ||P e_z||`.
    pub flux_error_a: f64,
    pub flux_error_b: f64,
    /// Relative residual of the untruncated pair of equations, when evaluated.
    pub physical_residual: Option<f64>,
}

impl ModeSolution {
    /// `X = (lambda alpha, lambda beta)`.
    pub fn x(&self, lambda: &[f64]) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(lambda)
            .map(|(a, l)| a * l)
            .chain(self.beta.iter().zip(lambda).map(|(b, l)| b * l))
            .collect()
    }
}

fn finish(sys: &ModeSystem, x: &[f64]) -> ModeSolution {
    let m = sys.m();
    let alpha: Vec<f64> = (0..m).map(|j| x[j] / sys.lambda[j]).collect();
    let beta: Vec<f64> = (0..m).map(|j| x[m + j] / sys.lambda[j]).collect();
    let a = sys.block_matrix();
    let xv = DVector::from_column_slice(x);
    let b = sys.rhs();
    let r = &a * &xv - &b;
    let bn = b.norm();
    let residual = if bn > 0.0 { r.norm() / bn } else { r.norm() };
    let flux_a: f64 = alpha.iter().zip(&sys.c_hat).map(|(a, c)| a * c).sum();
    let flux_b: f64 = beta.iter().zip(&sys.c_hat).map(|(a, c)| a * c).sum();
    let s = sys.scale();
    ModeSolution {
        k: sys.k,
        flux_error_a: (flux_a - s * sys.p).abs(),
        flux_error_b: (flux_b - s * sys.q).abs(),
        alpha,
        beta,
        residual,
        flux_a,
        flux_b,
        physical_residual: None,
    }
}

/// Sherman-Morrison solve, `O(m)`.
pub fn solve_mode(sys: &ModeSystem) -> Result<ModeSolution> {
    let m = sys.m();
    let w = sys.omega();
    let nu = sys.nu;
    let i = Complex64::i();
    let g = Complex64::new(sys.p, -sys.q);
    let f = i * w * sys.scale() * g;
    // D = nu + i omega / lambda; Z = D^{-1} c f / (1 - nu c^T D^{-1} c).
    let d: Vec<Complex64> = sys.lambda.iter().map(|l| nu + i * (w / l)).collect();
    let ebar: f64 = sys.c_hat.iter().map(|c| c * c).sum();
    // 1 - nu sum c^2 / d = (1 - |e_bar|^2) + sum c^2 (i omega / lambda) / d, without cancellation.
    let mut den = Complex64::new(1.0 - ebar, 0.0);
    for j in 0..m {
        den += sys.c_hat[j] * sys.c_hat[j] * (i * (w / sys.lambda[j])) / d[j];
    }
    if !(den.norm() > 0.0) || !den.re.is_finite() {
        return Err(PerifluxError::SolverFailure {
            context: format!("mode {}: singular rank-one update", sys.k),
            residual: den.norm(),
            iterations: 0,
        });
    }
    let mut x = vec![0.0; 2 * m];
    for j in 0..m {
        let z = sys.c_hat[j] * f / (d[j] * den);
        x[j] = z.re;
        x[m + j] = -z.im;
    }
    Ok(finish(sys, &x))
}

/// Dense LU solve of the assembled `2m` system.
pub fn solve_mode_dense(sys: &ModeSystem) -> Result<ModeSolution> {
    let a = sys.block_matrix();
    let b = sys.rhs();
    let x = a.lu().solve(&b).ok_or_else(|| PerifluxError::SolverFailure {
        context: format!("mode {}: dense system is singular", sys.k),
        residual: f64::NAN,
        iterations: 0,
    })?;
    Ok(finish(sys, x.as_slice()))
}

/// `(||A a||^2 + ||A b||^2) / ((1 + (2 pi k kappa / (T nu ||P e_z||))^2) (p^2 + q^2))`.
pub fn mode_estimate_check(sol: &ModeSolution, sys: &ModeSystem) -> f64 {
    let data = sys.p * sys.p + sys.q * sys.q;
    if data == 0.0 {
        return 0.0;
    }
    let x = sol.x(&sys.lambda);
    let num: f64 = x.iter().map(|v| v * v).sum();
    let f = 2.0 * PI * sys.k as f64 * sys.kappa / (sys.period * sys.nu * sys.pez_norm);
    num / ((1.0 + f * f) * data)
}

/// Relative residual of the untruncated equations for `a = sum alpha_j w_j`,
/// `b = sum beta_j w_j`, using the discrete Stokes operator of the space.
pub fn physical_residual(space: &DivFreeSpace, basis: &SpectralBasis, sys: &ModeSystem, sol: &ModeSolution) -> f64 {
    let n = space.dim();
    let combine = |coef: &[f64]| {
        let mut v = vec![0.0; n];
        for (c, w) in coef.iter().zip(&basis.eigenvectors) {
            for (a, b) in v.iter_mut().zip(w) {
                *a += c * b;
            }
        }
        v
    };
    let (a, b) = (combine(&sol.alpha), combine(&sol.beta));
    let (aa, ab) = (space.stokes_image(&a), space.stokes_image(&b));
    let e = &basis.e_field;
    let (w, nu, s) = (sys.omega(), sys.nu, sys.scale());
    let (ae, be) = (space.inner(&aa, e), space.inner(&ab, e));
    let r1: Vec<f64> = (0..n)
        .map(|i| w * b[i] + nu * aa[i] - nu * ae * e[i] - w * s * sys.q * e[i])
        .collect();
    let r2: Vec<f64> = (0..n)
        .map(|i| -w * a[i] + nu * ab[i] - nu * be * e[i] + w * s * sys.p * e[i])
        .collect();
    let rhs = w * s * (sys.p * sys.p + sys.q * sys.q).sqrt();
    let r = (space.inner(&r1, &r1) + space.inner(&r2, &r2)).sqrt();
    if rhs > 0.0 {
        r / rhs
    } else {
        r
    }
}

/// Solves modes `1..=K` concurrently.
pub fn solve_modes(
    basis: &SpectralBasis,
    nu: f64,
    period: f64,
    kappa: f64,
    pq: &[(f64, f64)],
) -> Result<Vec<(ModeSystem, ModeSolution)>> {
    pq.par_iter()
        .enumerate()
        .map(|(i, &(p, q))| {
            let sys = assemble_mode(basis, i + 1, nu, period, kappa, p, q)?;
            let sol = solve_mode(&sys)?;
            Ok((sys, sol))
        })
        .collect()
}
