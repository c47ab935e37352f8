//! Stokes flow driven by a periodic body force: the unconstrained forced
//! solve `v1`, the flux left over for the pressure-driven part, and the
//! composed operator `T f = v1 + v2`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{PerifluxError, Result};
use crate::fields::{flux_profile, DivFreeSpace, VectorField};
use crate::harmonic::{
    momentum_residual_forced, solve_periodic_stokes, zero_harmonic, FluxSignal, Harmonic, HarmonicSolution, Method,
};
use crate::linalg::dot;
use crate::spectrum::SpectralBasis;

/// Time-Fourier data of a force sampled at `N` uniform times.
#[derive(Debug, Clone)]
pub struct ForcingCoefficients {
    pub period: f64,
    pub k_f: usize,
    /// `(P f_0, w_j)`.
    pub zero: Vec<f64>,
    /// `cos[k-1][j]`, `sin[k-1][j]`: `(P f, w_j)` per harmonic.
    pub cos: Vec<Vec<f64>>,
    pub sin: Vec<Vec<f64>>,
    /// Galerkin loads `C^T M f` of the zero mode and each harmonic.
    pub load_zero: Vec<f64>,
    pub load_cos: Vec<Vec<f64>>,
    pub load_sin: Vec<Vec<f64>>,
    /// Velocity unknowns of each harmonic, `f_k = Re(F_k e^{i omega t})`.
    pub dofs_zero: Vec<f64>,
    pub dofs: Vec<Vec<Complex64>>,
    /// Energy of the sampled force outside the retained band, relative.
    pub discarded: f64,
}

impl ForcingCoefficients {
    pub fn omega(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    pub fn is_zero(&self) -> bool {
        self.load_zero
            .iter()
            .chain(self.load_cos.iter().flatten())
            .chain(self.load_sin.iter().flatten())
            .all(|v| *v == 0.0)
    }

    /// Largest absolute eigen-coefficient.
    pub fn max_coefficient(&self) -> f64 {
        self.zero
            .iter()
            .chain(self.cos.iter().flatten())
            .chain(self.sin.iter().flatten())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Complex forcing amplitude on the velocity unknowns, `k = 0` the mean.
    pub fn amplitude(&self, k: usize) -> Vec<Complex64> {
        if k == 0 {
            self.dofs_zero.iter().map(|v| Complex64::new(*v, 0.0)).collect()
        } else {
            self.dofs[k - 1].clone()
        }
    }
}

/// Fourier analysis of `f(t_i)`, `t_i = i T / N`. `k_f` defaults to `N / 4`.
pub fn forcing_coeffs(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    period: f64,
    samples: &[VectorField],
    k_f: Option<usize>,
) -> Result<ForcingCoefficients> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(PerifluxError::invalid("T", "period must be positive"));
    }
    let n = samples.len();
    let k_f = k_f.unwrap_or(n / 4);
    if k_f == 0 || n < 4 * k_f {
        return Err(PerifluxError::invalid(
            "f_samples",
            format!("{n} samples cannot resolve {} forcing harmonics; need at least {}", k_f.max(1), 4 * k_f.max(1)),
        ));
    }
    let grid = &space.grid;
    let mut dofs = Vec::with_capacity(n);
    for s in samples {
        s.check(grid)?;
        let d = space.layout.to_dofs(grid, s);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(PerifluxError::invalid("f_samples", "must be finite"));
        }
        dofs.push(d);
    }
    let nd = dofs[0].len();
    let nf = n as f64;
    let mut dofs_zero = vec![0.0; nd];
    for d in &dofs {
        for (z, v) in dofs_zero.iter_mut().zip(d) {
            *z += v / nf;
        }
    }
    let harm: Vec<Vec<Complex64>> = (1..=k_f)
        .into_par_iter()
        .map(|k| {
            let mut acc = vec![Complex64::new(0.0, 0.0); nd];
            for (i, d) in dofs.iter().enumerate() {
                // f = c cos + s sin = Re((c - i s) e^{i omega t}).
                let (sn, c) = (2.0 * PI * ((k * i) % n) as f64 / nf).sin_cos();
                let w = Complex64::new(2.0 * c / nf, -2.0 * sn / nf);
                for (a, v) in acc.iter_mut().zip(d) {
                    *a += w * v;
                }
            }
            acc
        })
        .collect();
    let m = space.full_mass();
    let energy = |x: &[f64]| -> f64 { x.iter().zip(m).map(|(a, w)| a * a * w).sum() };
    let total: f64 = dofs.iter().map(|d| energy(d)).sum::<f64>() / nf;
    let kept: f64 = energy(&dofs_zero)
        + 0.5
            * harm
                .iter()
                .map(|h| {
                    let re: Vec<f64> = h.iter().map(|c| c.re).collect();
                    let im: Vec<f64> = h.iter().map(|c| c.im).collect();
                    energy(&re) + energy(&im)
                })
                .sum::<f64>();
    let discarded = if total > 0.0 { ((total - kept) / total).max(0.0) } else { 0.0 };
    let load_zero = space.load(&dofs_zero);
    let load_cos: Vec<Vec<f64>> = harm
        .iter()
        .map(|h| space.load(&h.iter().map(|c| c.re).collect::<Vec<_>>()))
        .collect();
    let load_sin: Vec<Vec<f64>> = harm
        .iter()
        .map(|h| space.load(&h.iter().map(|c| -c.im).collect::<Vec<_>>()))
        .collect();
    let proj = |l: &[f64]| -> Vec<f64> { basis.eigenvectors.iter().map(|w| dot(w, l)).collect() };
    Ok(ForcingCoefficients {
        period,
        k_f,
        zero: proj(&load_zero),
        cos: load_cos.iter().map(|l| proj(l)).collect(),
        sin: load_sin.iter().map(|l| proj(l)).collect(),
        load_zero,
        load_cos,
        load_sin,
        dofs_zero,
        dofs: harm,
        discarded,
    })
}

fn flux_coefs(space: &DivFreeSpace, k: usize, omega: f64, a: Vec<f64>, b: Vec<f64>) -> Harmonic {
    Harmonic {
        k,
        omega,
        p: space.flux(&a),
        q: space.flux(&b),
        a,
        b,
        psi: Complex64::new(0.0, 0.0),
        mode: None,
    }
}

fn unconstrained(space: &DivFreeSpace, basis: &SpectralBasis, c: &ForcingCoefficients, nu: f64, method: Method, a0: Vec<f64>, harmonics: Vec<Harmonic>) -> HarmonicSolution {
    HarmonicSolution {
        method,
        nu,
        period: c.period,
        kappa: space.kappa(),
        pez_norm: basis.pez_norm,
        c1sq: basis.c1sq,
        c_tilde: 0.0,
        a0,
        psi0: 0.0,
        harmonics,
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(PerifluxError::invalid("nu", "viscosity must be positive"))
    }
}

/// `v1' + nu A v1 = P f` in the eigenbasis: one 2x2 system per `(j, k)`.
pub fn solve_forced_stokes(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    c: &ForcingCoefficients,
    nu: f64,
) -> Result<HarmonicSolution> {
    check_nu(nu)?;
    if c.zero.len() != basis.m {
        return Err(PerifluxError::IncompatibleField("coefficients were built on another basis".into()));
    }
    let n = space.dim();
    let assemble = |coef: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (cj, w) in coef.iter().zip(&basis.eigenvectors) {
            if *cj != 0.0 {
                x.iter_mut().zip(w).for_each(|(a, b)| *a += cj * b);
            }
        }
        x
    };
    let zero: Vec<f64> = c
        .zero
        .iter()
        .zip(&basis.eigenvalues)
        .map(|(f, l)| f / (nu * l))
        .collect();
    let harmonics = (1..=c.k_f)
        .into_par_iter()
        .map(|k| {
            let omega = c.omega(k);
            let (mut al, mut be) = (vec![0.0; basis.m], vec![0.0; basis.m]);
            for j in 0..basis.m {
                // omega b + nu lambda a = fc, -omega a + nu lambda b = fs.
                let d = nu * basis.eigenvalues[j];
                let (fc, fs) = (c.cos[k - 1][j], c.sin[k - 1][j]);
                let det = d * d + omega * omega;
                al[j] = (d * fc - omega * fs) / det;
                be[j] = (omega * fc + d * fs) / det;
            }
            flux_coefs(space, k, omega, assemble(&al), assemble(&be))
        })
        .collect();
    Ok(unconstrained(space, basis, c, nu, Method::Galerkin, assemble(&zero), harmonics))
}

/// `v1` in the full discrete divergence-free space.
pub fn solve_forced_resolvent(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    c: &ForcingCoefficients,
    nu: f64,
) -> Result<HarmonicSolution> {
    check_nu(nu)?;
    let n = space.dim();
    if c.load_zero.len() != n {
        return Err(PerifluxError::IncompatibleField("coefficients were built on another grid".into()));
    }
    let mut a0 = space.solve_stiffness(&c.load_zero);
    a0.iter_mut().for_each(|v| *v /= nu);
    let harmonics: Result<Vec<Harmonic>> = (1..=c.k_f)
        .into_par_iter()
        .map(|k| {
            let omega = c.omega(k);
            let (lc, ls) = (&c.load_cos[k - 1], &c.load_sin[k - 1]);
            if lc.iter().chain(ls.iter()).all(|v| *v == 0.0) {
                return Ok(zero_harmonic(k, omega, n));
            }
            let rhs: Vec<Complex64> = lc.iter().zip(ls).map(|(a, b)| Complex64::new(*a, -*b)).collect();
            let z = space.resolvent(nu, omega)?.solve(&rhs);
            Ok(flux_coefs(space, k, omega, z.iter().map(|v| v.re).collect(), z.iter().map(|v| -v.im).collect()))
        })
        .collect();
    Ok(unconstrained(space, basis, c, nu, Method::Resolvent, a0, harmonics?))
}

/// Flux still to be carried by the pressure-driven part, `g - flux(v1)`.
#[derive(Debug, Clone, Serialize)]
pub struct FluxCorrection {
    pub g_tilde: FluxSignal,
    /// Largest spread of the row fluxes of any `v1` coefficient field,
    /// relative to its largest row flux.
    pub z_deviation: f64,
}

pub fn flux_correction(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    v1: &HarmonicSolution,
    g: &FluxSignal,
) -> Result<FluxCorrection> {
    if (v1.period - g.period).abs() > 1e-14 * g.period {
        return Err(PerifluxError::invalid("T", "force and flux periods differ"));
    }
    // Q(v) = (v, e) ||P e_z|| / kappa.
    let s = basis.pez_norm / space.kappa();
    let q = |x: &[f64]| s * space.inner(x, &basis.e_field);
    let kmax = g.harmonics().max(v1.harmonics.len());
    let mut p = vec![0.0; kmax];
    let mut qs = vec![0.0; kmax];
    p[..g.harmonics()].copy_from_slice(&g.p);
    qs[..g.harmonics()].copy_from_slice(&g.q);
    let mut dev: f64 = 0.0;
    let mut row_dev = |x: &[f64]| -> Result<()> {
        let prof = flux_profile(&space.grid, &space.field(x))?;
        let scale = prof.rows.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if scale > 0.0 {
            dev = dev.max(prof.max_deviation / scale);
        }
        Ok(())
    };
    row_dev(&v1.a0)?;
    for h in &v1.harmonics {
        p[h.k - 1] -= q(&h.a);
        qs[h.k - 1] -= q(&h.b);
        row_dev(&h.a)?;
        row_dev(&h.b)?;
    }
    Ok(FluxCorrection {
        g_tilde: FluxSignal::new(g.period, g.p0 - q(&v1.a0), p, qs)?,
        z_deviation: dev,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ForcedReport {
    pub g_tilde: FluxSignal,
    pub z_deviation: f64,
    /// Largest relative momentum residual over the harmonics.
    pub momentum_residual: f64,
    pub discarded_forcing: f64,
}

/// `v = T f`: forced part plus the pressure-driven part carrying `g~`.
/// `residual_check` runs the pressure-reconstructing momentum check.
pub fn solve_t(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    c: &ForcingCoefficients,
    g: &FluxSignal,
    nu: f64,
    method: Method,
    residual_check: bool,
) -> Result<(HarmonicSolution, ForcedReport)> {
    let v1 = match method {
        Method::Resolvent => solve_forced_resolvent(space, basis, c, nu)?,
        Method::Galerkin => solve_forced_stokes(space, basis, c, nu)?,
    };
    let corr = flux_correction(space, basis, &v1, g)?;
    let v2 = solve_periodic_stokes(space, basis, &corr.g_tilde, nu, method)?;
    let mut v = v2.combine(1.0, &v1)?;
    v.method = method;
    // Report the prescribed flux, not the sum of the parts' bookkeeping.
    for h in v.harmonics.iter_mut() {
        h.p = g.p.get(h.k - 1).copied().unwrap_or(0.0);
        h.q = g.q.get(h.k - 1).copied().unwrap_or(0.0);
    }
    let mut residual: f64 = 0.0;
    if residual_check {
        for k in 0..=v.harmonics.len() {
            let f = if k <= c.k_f { Some(c.amplitude(k)) } else { None };
            residual = residual.max(momentum_residual_forced(space, &v, k, f.as_deref())?);
        }
    }
    Ok((
        v,
        ForcedReport {
            g_tilde: corr.g_tilde,
            z_deviation: corr.z_deviation,
            momentum_residual: residual,
            discarded_forcing: c.discarded,
        },
    ))
}

#[cfg(test)]
mod tests;
