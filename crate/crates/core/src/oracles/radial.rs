//! Fully developed oscillatory flow in a straight pipe or channel from a 1D
//! radial boundary-value problem per harmonic, scaled to the prescribed flux.
//!
//! Independent of the 2D discretization: own uniform grid on `[0, R]`,
//! three-point stencils, symmetry at the centre and a complex Thomas solve.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{PerifluxError, Result};
use crate::fields::VectorField;
use crate::geometry::{GeometryKind, MappedGrid};
use crate::harmonic::FluxSignal;

pub const MIN_RADIAL_NODES: usize = 256;

#[derive(Debug, Clone, Serialize)]
pub struct RadialOracleResult {
    pub kind: GeometryKind,
    pub r0: f64,
    pub nu: f64,
    pub period: f64,
    /// Node radii `rho_i = i R / Nr`, `i = 0..=Nr`.
    pub nodes: Vec<f64>,
    /// `profiles[k][i]`, harmonic `k = 0..=K`; `u_z = Re(profile e^{i omega_k t})`.
    #[serde(skip)]
    pub profiles: Vec<Vec<Complex64>>,
    /// Axial drive amplitude realizing each flux harmonic.
    #[serde(skip)]
    pub drives: Vec<Complex64>,
    /// Quadrature flux of each scaled profile.
    #[serde(skip)]
    pub fluxes: Vec<Complex64>,
}

/// Solves `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i`.
fn thomas(a: &[Complex64], b: &[Complex64], c: &[Complex64], d: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let mut cp = vec![Complex64::new(0.0, 0.0); n];
    let mut dp = vec![Complex64::new(0.0, 0.0); n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= cp[i] * next;
    }
    x
}

/// Profile driven by a unit axial force: `i omega u - nu L u = 1`, `u(R) = 0`.
fn unit_profile(kind: GeometryKind, r0: f64, nu: f64, omega: f64, nr: usize) -> Vec<Complex64> {
    let h = r0 / nr as f64;
    let m = if kind == GeometryKind::Axisym { 1.0 } else { 0.0 };
    let iw = Complex64::new(0.0, omega);
    let n = nr; // unknowns at nodes 0..nr-1
    let z = Complex64::new(0.0, 0.0);
    let (mut a, mut b, mut c) = (vec![z; n], vec![z; n], vec![z; n]);
    let d = vec![Complex64::new(1.0, 0.0); n];
    let s = nu / (h * h);
    // Centre: u'(0) = 0 and (u'/rho)(0) = u''(0).
    b[0] = iw + 2.0 * (1.0 + m) * s;
    c[0] = Complex64::new(-2.0 * (1.0 + m) * s, 0.0);
    for i in 1..n {
        let rho = i as f64 * h;
        let g = m * nu / (2.0 * h * rho);
        a[i] = Complex64::new(-s + g, 0.0);
        b[i] = iw + 2.0 * s;
        c[i] = Complex64::new(-s - g, 0.0);
    }
    let mut u = thomas(&a, &b, &c, &d);
    u.push(z);
    u
}

/// Trapezoid flux over the section.
fn quad_flux(kind: GeometryKind, r0: f64, u: &[Complex64]) -> Complex64 {
    let nr = u.len() - 1;
    let h = r0 / nr as f64;
    let w = |i: usize| -> f64 {
        let end = if i == 0 || i == nr { 0.5 } else { 1.0 };
        match kind {
            GeometryKind::Planar2D => 2.0 * h * end,
            GeometryKind::Axisym => 2.0 * PI * (i as f64 * h) * h * end,
        }
    };
    u.iter().enumerate().map(|(i, v)| v * w(i)).sum()
}

pub fn womersley_radial(
    kind: GeometryKind,
    r0: f64,
    nu: f64,
    flux: &FluxSignal,
    nr: usize,
) -> Result<RadialOracleResult> {
    if nr < MIN_RADIAL_NODES {
        return Err(PerifluxError::invalid("Nr", format!("need at least {MIN_RADIAL_NODES} radial nodes")));
    }
    if !(r0 > 0.0 && nu > 0.0) {
        return Err(PerifluxError::invalid("r0, nu", "must be positive"));
    }
    let mut profiles = Vec::new();
    let mut drives = Vec::new();
    let mut fluxes = Vec::new();
    for k in 0..=flux.harmonics() {
        let (omega, g) = if k == 0 {
            (0.0, Complex64::new(flux.p0, 0.0))
        } else {
            (flux.omega(k), flux.complex(k))
        };
        let u1 = unit_profile(kind, r0, nu, omega, nr);
        let f1 = quad_flux(kind, r0, &u1);
        let s = g / f1;
        let u: Vec<Complex64> = u1.iter().map(|v| v * s).collect();
        fluxes.push(quad_flux(kind, r0, &u));
        profiles.push(u);
        drives.push(s);
    }
    Ok(RadialOracleResult {
        kind,
        r0,
        nu,
        period: flux.period,
        nodes: (0..=nr).map(|i| r0 * i as f64 / nr as f64).collect(),
        profiles,
        drives,
        fluxes,
    })
}

/// Errors for oracles that only apply to straight pipes.
pub fn require_straight(grid: &MappedGrid) -> Result<()> {
    if grid.profile.is_straight() {
        Ok(())
    } else {
        Err(PerifluxError::InvalidOracleUse("the radial oracle needs a straight pipe".into()))
    }
}

impl RadialOracleResult {
    fn omega(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    /// Complex amplitude of harmonic `k` at `|rho| <= R`, linear interpolation.
    pub fn amplitude(&self, k: usize, rho: f64) -> Complex64 {
        let nr = self.nodes.len() - 1;
        let s = (rho.abs() / self.r0 * nr as f64).clamp(0.0, nr as f64);
        let i = (s.floor() as usize).min(nr - 1);
        let f = s - i as f64;
        self.profiles[k][i] * (1.0 - f) + self.profiles[k][i + 1] * f
    }

    pub fn eval(&self, rho: f64, t: f64) -> f64 {
        let tau = t.rem_euclid(self.period);
        (0..self.profiles.len())
            .map(|k| (self.amplitude(k, rho) * Complex64::from_polar(1.0, self.omega(k) * tau)).re)
            .sum()
    }

    /// Axial drive `psi(t)`.
    pub fn drive(&self, t: f64) -> f64 {
        let tau = t.rem_euclid(self.period);
        self.drives
            .iter()
            .enumerate()
            .map(|(k, d)| (d * Complex64::from_polar(1.0, self.omega(k) * tau)).re)
            .sum()
    }

    /// Oracle velocity sampled on a straight 2D grid of the same radius.
    pub fn field(&self, grid: &MappedGrid, t: f64) -> Result<VectorField> {
        require_straight(grid)?;
        if grid.kind != self.kind || (grid.profile.r0 - self.r0).abs() > 1e-14 * self.r0 {
            return Err(PerifluxError::IncompatibleField("grid does not match the oracle pipe".into()));
        }
        let r0 = self.r0;
        Ok(VectorField::from_fn(grid, |_, _| 0.0, |xi, _| self.eval(xi * r0, t), |_, _| 0.0))
    }

    /// `|u(0)| / |u'(R)|` of harmonic `k`, a wall-layer thickness.
    pub fn boundary_layer_thickness(&self, k: usize) -> f64 {
        let p = &self.profiles[k];
        let nr = p.len() - 1;
        let h = self.r0 / nr as f64;
        // Second-order one-sided wall derivative.
        let d = (3.0 * p[nr] - 4.0 * p[nr - 1] + p[nr - 2]) / (2.0 * h);
        p[0].norm() / d.norm()
    }
}

/// Steady fully developed profile carrying flux `g0`.
pub fn poiseuille_profile(kind: GeometryKind, r0: f64, g0: f64, rho: f64) -> f64 {
    match kind {
        GeometryKind::Planar2D => 3.0 * g0 / (4.0 * r0.powi(3)) * (r0 * r0 - rho * rho),
        GeometryKind::Axisym => 2.0 * g0 / (PI * r0.powi(4)) * (r0 * r0 - rho * rho),
    }
}
