//! Time-periodic Stokes flow with prescribed flux, harmonic by harmonic.
//!
//! The zero mode is `c~ w`. Harmonic `k` is `v_k(t) = Re(Z e^{i omega t})`
//! with `Z = a_k - i b_k`; in the full discrete space
//! `(nu A + i omega) Z = mu e` for a scalar `mu` fixed by the flux, so
//! `Z = g_k y / Q(y)` with `(nu K~ + i omega M~) y = kappa e_Q`.

mod estimates;
mod flux;
mod pressure;

pub use estimates::{verify_estimates, EstimateReport};
pub use flux::{flux_fourier, FluxSignal, ENERGY_CAPTURE};
pub use pressure::{pressure_decompose, PressureDecomposition, PressureSamples};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PerifluxError, Result};
use crate::fields::{flux_profile, leray_project, norm, unit_axial_field, DivFreeSpace, VectorField};
use crate::geometry::MappedGrid;
use crate::linalg::dot;
use crate::modes::{assemble_mode, physical_residual, solve_mode, ModeSolution};
use crate::spectrum::SpectralBasis;

/// How the harmonic systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exact solve in the whole discrete divergence-free space.
    #[default]
    Resolvent,
    /// Truncated eigenbasis systems of the modes module.
    Galerkin,
}

#[derive(Debug, Clone)]
pub struct Harmonic {
    pub k: usize,
    pub omega: f64,
    pub p: f64,
    pub q: f64,
    /// Cosine and sine coefficients in reduced coordinates.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `psi_k(t) = Re(psi e^{i omega t})`.
    pub psi: Complex64,
    pub mode: Option<ModeSolution>,
}

impl Harmonic {
    fn z(&self) -> Vec<Complex64> {
        self.a.iter().zip(&self.b).map(|(a, b)| Complex64::new(*a, -*b)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    pub method: Method,
    pub nu: f64,
    pub period: f64,
    pub kappa: f64,
    pub pez_norm: f64,
    pub c1sq: f64,
    pub c_tilde: f64,
    /// Zero mode `c~ w`.
    pub a0: Vec<f64>,
    pub psi0: f64,
    pub harmonics: Vec<Harmonic>,
}

pub(crate) fn zero_harmonic(k: usize, omega: f64, n: usize) -> Harmonic {
    Harmonic {
        k,
        omega,
        p: 0.0,
        q: 0.0,
        a: vec![0.0; n],
        b: vec![0.0; n],
        psi: Complex64::new(0.0, 0.0),
        mode: None,
    }
}

/// `(A z, e)` for reduced `z`: `z^T K~ e`.
fn stokes_against_e(space: &DivFreeSpace, basis: &SpectralBasis, z: &[f64]) -> f64 {
    dot(&space.apply_stiffness(z), &basis.e_field)
}

pub fn solve_periodic_stokes(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    flux: &FluxSignal,
    nu: f64,
    method: Method,
) -> Result<HarmonicSolution> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(PerifluxError::invalid("nu", "viscosity must be positive"));
    }
    if basis.e_field.len() != space.dim() {
        return Err(PerifluxError::IncompatibleField("basis was built on a different grid".into()));
    }
    if method == Method::Galerkin && basis.m == 0 {
        return Err(PerifluxError::invalid("m", "the Galerkin method needs eigenpairs"));
    }
    let n = space.dim();
    let kappa = space.kappa();
    let pez = basis.pez_norm;
    let c_tilde = kappa * flux.p0 / (pez * basis.c1sq);
    let a0: Vec<f64> = basis.w_flow.iter().map(|w| c_tilde * w).collect();
    // nu A a0 = nu c~ e = psi0 ||P e_z|| e.
    let psi0 = nu * c_tilde / pez;
    let harmonics: Result<Vec<Harmonic>> = (1..=flux.harmonics())
        .into_par_iter()
        .map(|k| {
            let omega = flux.omega(k);
            let g = flux.complex(k);
            if g.norm() == 0.0 {
                return Ok(zero_harmonic(k, omega, n));
            }
            match method {
                Method::Resolvent => {
                    let f = space.resolvent(nu, omega)?;
                    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
                    rhs[space.flux_index()] = Complex64::new(kappa, 0.0);
                    let y = f.solve(&rhs);
                    let yq = y[space.flux_index()];
                    let s = g / yq;
                    let z: Vec<Complex64> = y.iter().map(|v| v * s).collect();
                    Ok(Harmonic {
                        k,
                        omega,
                        p: flux.p[k - 1],
                        q: flux.q[k - 1],
                        a: z.iter().map(|v| v.re).collect(),
                        b: z.iter().map(|v| -v.im).collect(),
                        psi: s,
                        mode: None,
                    })
                }
                Method::Galerkin => {
                    let sys = assemble_mode(basis, k, nu, flux.period, kappa, flux.p[k - 1], flux.q[k - 1])?;
                    let mut sol = solve_mode(&sys)?;
                    sol.physical_residual = Some(physical_residual(space, basis, &sys, &sol));
                    let mut a = vec![0.0; n];
                    let mut b = vec![0.0; n];
                    for (j, w) in basis.eigenvectors.iter().enumerate() {
                        for i in 0..n {
                            a[i] += sol.alpha[j] * w[i];
                            b[i] += sol.beta[j] * w[i];
                        }
                    }
                    let ae = stokes_against_e(space, basis, &a);
                    let be = stokes_against_e(space, basis, &b);
                    let aze = Complex64::new(ae, -be);
                    let psi = (Complex64::i() * omega * kappa * g + nu * aze * pez) / (pez * pez);
                    Ok(Harmonic {
                        k,
                        omega,
                        p: flux.p[k - 1],
                        q: flux.q[k - 1],
                        a,
                        b,
                        psi,
                        mode: Some(sol),
                    })
                }
            }
        })
        .collect();
    Ok(HarmonicSolution {
        method,
        nu,
        period: flux.period,
        kappa,
        pez_norm: pez,
        c1sq: basis.c1sq,
        c_tilde,
        a0,
        psi0,
        harmonics: harmonics?,
    })
}

impl HarmonicSolution {
    fn phase(&self, k: usize, t: f64) -> f64 {
        let tau = t.rem_euclid(self.period);
        2.0 * std::f64::consts::PI * k as f64 * tau / self.period
    }

    /// Reduced coordinates of `v(t)`.
    pub fn reduced(&self, t: f64) -> Vec<f64> {
        let mut v = self.a0.clone();
        for h in &self.harmonics {
            let (s, c) = self.phase(h.k, t).sin_cos();
            for (i, x) in v.iter_mut().enumerate() {
                *x += h.a[i] * c + h.b[i] * s;
            }
        }
        v
    }

    /// Reduced coordinates of `v'(t)`.
    pub fn reduced_derivative(&self, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.a0.len()];
        for h in &self.harmonics {
            let (s, c) = self.phase(h.k, t).sin_cos();
            for (i, x) in v.iter_mut().enumerate() {
                *x += h.omega * (-h.a[i] * s + h.b[i] * c);
            }
        }
        v
    }

    pub fn evaluate(&self, space: &DivFreeSpace, t: f64) -> VectorField {
        space.field(&self.reduced(t))
    }

    pub fn psi(&self, t: f64) -> f64 {
        let mut s = self.psi0;
        for h in &self.harmonics {
            let (sn, c) = self.phase(h.k, t).sin_cos();
            s += h.psi.re * c - h.psi.im * sn;
        }
        s
    }

    /// `(alpha_j, beta_j) = ((a_k, w_j), (b_k, w_j))` for every harmonic.
    pub fn eigen_coefficients(&self, space: &DivFreeSpace, basis: &SpectralBasis) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mw: Vec<Vec<f64>> = basis.eigenvectors.iter().map(|w| space.apply_mass(w)).collect();
        self.harmonics
            .iter()
            .map(|h| {
                let al = mw.iter().map(|w| dot(w, &h.a)).collect();
                let be = mw.iter().map(|w| dot(w, &h.b)).collect();
                (al, be)
            })
            .collect()
    }

    /// Largest `|flux(z, t) - g(t)|` over every axial row and `nt` sample times,
    /// relative to `max |g|`.
    pub fn max_flux_error(&self, space: &DivFreeSpace, flux: &FluxSignal, nt: usize) -> Result<f64> {
        let gmax = flux.max_abs_sampled(nt.max(8)).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..nt {
            let t = self.period * i as f64 / nt as f64;
            let prof = flux_profile(&space.grid, &self.evaluate(space, t))?;
            let g = flux.eval(t);
            for r in prof.rows {
                worst = worst.max((r - g).abs());
            }
        }
        Ok(worst / gmax)
    }

    /// Coefficientwise `self + s * other`; harmonic lists are padded with zeros.
    pub fn combine(&self, s: f64, other: &HarmonicSolution) -> Result<HarmonicSolution> {
        if self.period != other.period || self.a0.len() != other.a0.len() {
            return Err(PerifluxError::IncompatibleField("solutions differ in period or grid".into()));
        }
        let n = self.a0.len();
        let kmax = self.harmonics.len().max(other.harmonics.len());
        let axpy = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a + s * b).collect() };
        let harmonics = (1..=kmax)
            .map(|k| {
                let omega = 2.0 * std::f64::consts::PI * k as f64 / self.period;
                let z = zero_harmonic(k, omega, n);
                let a = self.harmonics.get(k - 1).unwrap_or(&z);
                let b = other.harmonics.get(k - 1).unwrap_or(&z);
                Harmonic {
                    k,
                    omega,
                    p: a.p + s * b.p,
                    q: a.q + s * b.q,
                    a: axpy(&a.a, &b.a),
                    b: axpy(&a.b, &b.b),
                    psi: a.psi + s * b.psi,
                    mode: None,
                }
            })
            .collect();
        Ok(HarmonicSolution {
            method: self.method,
            nu: self.nu,
            period: self.period,
            kappa: self.kappa,
            pez_norm: self.pez_norm,
            c1sq: self.c1sq,
            c_tilde: self.c_tilde + s * other.c_tilde,
            a0: axpy(&self.a0, &other.a0),
            psi0: self.psi0 + s * other.psi0,
            harmonics,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.a0
            .iter()
            .chain(self.harmonics.iter().flat_map(|h| h.a.iter().chain(&h.b)))
            .all(|v| *v == 0.0)
    }

    /// Largest absolute coefficient of the solution.
    pub fn max_coefficient(&self) -> f64 {
        self.a0
            .iter()
            .chain(self.harmonics.iter().flat_map(|h| h.a.iter().chain(&h.b)))
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Fourier data of `psi(t)` recovered from `v` by
/// `psi = (kappa g' + nu (A v, e) ||P e_z||) / ||P e_z||^2`.
#[derive(Debug, Clone, Serialize)]
pub struct PsiSeries {
    pub period: f64,
    pub psi0: f64,
    /// `(Re, Im)` of the complex amplitude per harmonic.
    pub coeffs: Vec<(f64, f64)>,
}

impl PsiSeries {
    pub fn eval(&self, t: f64) -> f64 {
        let tau = t.rem_euclid(self.period);
        let mut s = self.psi0;
        for (k, (re, im)) in self.coeffs.iter().enumerate() {
            let (sn, c) = (2.0 * std::f64::consts::PI * (k + 1) as f64 * tau / self.period).sin_cos();
            s += re * c - im * sn;
        }
        s
    }

    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = self.period * i as f64 / n as f64;
                (t, self.eval(t))
            })
            .collect()
    }
}

pub fn recover_psi(space: &DivFreeSpace, basis: &SpectralBasis, sol: &HarmonicSolution, flux: &FluxSignal) -> PsiSeries {
    let pez = basis.pez_norm;
    let nu = sol.nu;
    let psi0 = nu * stokes_against_e(space, basis, &sol.a0) / pez;
    let coeffs = sol
        .harmonics
        .iter()
        .map(|h| {
            let g = flux.complex(h.k);
            let ae = stokes_against_e(space, basis, &h.a);
            let be = stokes_against_e(space, basis, &h.b);
            let v = (Complex64::i() * h.omega * sol.kappa * g + nu * Complex64::new(ae, -be) * pez) / (pez * pez);
            (v.re, v.im)
        })
        .collect();
    PsiSeries {
        period: sol.period,
        psi0,
        coeffs,
    }
}

/// Residual of `v' - nu Delta v + grad p~ = psi e_z` for one harmonic (`k = 0`
/// is the mean), with `grad p~` reconstructed by a pressure Poisson solve.
/// Relative to `||nu Delta v||`.
pub fn momentum_residual(space: &DivFreeSpace, sol: &HarmonicSolution, k: usize) -> Result<f64> {
    momentum_residual_forced(space, sol, k, None)
}

/// As [`momentum_residual`] with a body force whose harmonic `k` has complex
/// amplitude `forcing` on the velocity unknowns (`f = Re(F e^{i omega t})`).
/// Relative to `||nu Delta v|| + ||f||`.
pub fn momentum_residual_forced(
    space: &DivFreeSpace,
    sol: &HarmonicSolution,
    k: usize,
    forcing: Option<&[Complex64]>,
) -> Result<f64> {
    let grid = &space.grid;
    let (z, omega, psi) = if k == 0 {
        let z: Vec<Complex64> = sol.a0.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        (z, 0.0, Complex64::new(sol.psi0, 0.0))
    } else {
        let h = sol
            .harmonics
            .get(k - 1)
            .ok_or_else(|| PerifluxError::invalid("k", "harmonic not in the solution"))?;
        (h.z(), h.omega, h.psi)
    };
    let zu = space.lift_complex(&z);
    let kz = crate::linalg::spmv_c(space.full_stiffness(), &zu);
    let mass = space.full_mass();
    let ez = space.layout.to_dofs(grid, &unit_axial_field(grid));
    let zero = vec![Complex64::new(0.0, 0.0); zu.len()];
    let f = forcing.unwrap_or(&zero);
    if f.len() != zu.len() {
        return Err(PerifluxError::IncompatibleField("forcing has the wrong size".into()));
    }
    let mut worst: f64 = 0.0;
    for part in 0..2 {
        let pick = |c: Complex64| if part == 0 { c.re } else { c.im };
        // r = i omega Z + nu M^{-1} K Z - psi e_z - F.
        let visc: Vec<f64> = (0..zu.len()).map(|i| pick(kz[i] * (sol.nu / mass[i]))).collect();
        let r: Vec<f64> = (0..zu.len())
            .map(|i| pick(Complex64::i() * omega * zu[i] - psi * ez[i] - f[i]) + visc[i])
            .collect();
        let fr: Vec<f64> = f.iter().map(|c| pick(*c)).collect();
        let proj = leray_project(grid, &space.layout.from_dofs(grid, &r), 1e-13)?;
        let scale = norm(grid, &space.layout.from_dofs(grid, &visc))? + norm(grid, &space.layout.from_dofs(grid, &fr))?;
        if scale > 0.0 {
            worst = worst.max(norm(grid, &proj.projected)? / scale);
        }
    }
    Ok(worst)
}

/// `||v - <v>_zeta|| / ||v||`, the departure from axial invariance.
pub fn axial_variation(grid: &MappedGrid, v: &VectorField) -> Result<f64> {
    let mut mean = v.clone();
    let nz = grid.nzeta as f64;
    for i in 0..=grid.nxi {
        let m: f64 = (0..grid.nzeta).map(|j| v.ux[grid.x_idx(i, j)]).sum::<f64>() / nz;
        for j in 0..grid.nzeta {
            mean.ux[grid.x_idx(i, j)] = m;
        }
    }
    for i in 0..grid.nxi {
        let m: f64 = (0..grid.nzeta).map(|j| v.uz[grid.c_idx(i, j)]).sum::<f64>() / nz;
        for j in 0..grid.nzeta {
            mean.uz[grid.c_idx(i, j)] = m;
        }
        if let (Some(t), Some(src)) = (mean.utheta.as_mut(), v.utheta.as_ref()) {
            let m: f64 = (0..grid.nzeta).map(|j| src[grid.c_idx(i, j)]).sum::<f64>() / nz;
            for j in 0..grid.nzeta {
                t[grid.c_idx(i, j)] = m;
            }
        }
    }
    let total = norm(grid, v)?;
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut d = v.clone();
    d.axpy(-1.0, &mean);
    Ok(norm(grid, &d)? / total)
}

#[cfg(test)]
mod tests;
