//! Crank-Nicolson time stepping in the divergence-free space, run until the
//! orbit repeats after one period.
//!
//! Flux-driven runs carry a scalar axial drive per step. The drive is the
//! Lagrange multiplier of the flux constraint, found by linearity from one
//! extra solve with a unit drive.

use serde::Serialize;

use crate::error::{PerifluxError, Result};
use crate::fields::DivFreeSpace;
use crate::forcing::ForcingCoefficients;
use crate::harmonic::FluxSignal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub enum Drive<'a> {
    /// Prescribed flux, axial drive solved for.
    Flux(&'a FluxSignal),
    /// Body force, flux left free.
    Force(&'a ForcingCoefficients),
}

impl Drive<'_> {
    fn period(&self) -> f64 {
        match self {
            Drive::Flux(g) => g.period,
            Drive::Force(f) => f.period,
        }
    }

    fn harmonics(&self) -> usize {
        match self {
            Drive::Flux(g) => g.harmonics(),
            Drive::Force(f) => f.k_f,
        }
    }
}

/// Load of the body force at time `t`.
fn force_load(f: &ForcingCoefficients, t: f64) -> Vec<f64> {
    let mut l = f.load_zero.clone();
    for k in 1..=f.k_f {
        let (s, c) = (f.omega(k) * t).sin_cos();
        for (i, v) in l.iter_mut().enumerate() {
            *v += c * f.load_cos[k - 1][i] + s * f.load_sin[k - 1][i];
        }
    }
    l
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicOrbit {
    pub dt: f64,
    pub steps_per_period: usize,
    pub periods_run: usize,
    /// Reduced states at `t_i = i dt`, `i = 0..steps_per_period`, of the last period.
    #[serde(skip)]
    pub states: Vec<Vec<f64>>,
    /// Axial drive over each step of the last period (flux runs).
    pub psi: Vec<f64>,
    /// `||v(nT + T) - v(nT)|| / ||v||` after each period.
    pub gaps: Vec<f64>,
}

impl PeriodicOrbit {
    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|i| i as f64 * self.dt).collect()
    }
}

struct Stepper<'a> {
    space: &'a DivFreeSpace,
    drive: Drive<'a>,
    nu: f64,
    dt: f64,
    solve: std::sync::Arc<crate::linalg::Skyline<f64>>,
    /// Response to a unit drive held over one step.
    unit: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(space: &'a DivFreeSpace, drive: Drive<'a>, nu: f64, dt: f64) -> Result<Self> {
        let solve = space.shifted(1.0, 0.5 * dt * nu)?;
        let mut e = space.flux_load();
        let k = space.kappa();
        e.iter_mut().for_each(|v| *v *= dt * k);
        let unit = solve.solve(&e);
        Ok(Stepper {
            space,
            drive,
            nu,
            dt,
            solve,
            unit,
        })
    }

    /// One step from `t` to `t + dt`; returns the state and the drive.
    fn step(&self, v: &[f64], t: f64) -> (Vec<f64>, f64) {
        let mv = self.space.apply_mass(v);
        let kv = self.space.apply_stiffness(v);
        let h = 0.5 * self.dt * self.nu;
        let mut rhs: Vec<f64> = mv.iter().zip(&kv).map(|(m, k)| m - h * k).collect();
        if let Drive::Force(f) = self.drive {
            let (a, b) = (force_load(f, t), force_load(f, t + self.dt));
            for i in 0..rhs.len() {
                rhs[i] += 0.5 * self.dt * (a[i] + b[i]);
            }
        }
        let mut y = self.solve.solve(&rhs);
        let mut psi = 0.0;
        if let Drive::Flux(g) = self.drive {
            let q = self.space.flux_index();
            psi = (g.eval(t + self.dt) - y[q]) / self.unit[q];
            for (a, u) in y.iter_mut().zip(&self.unit) {
                *a += psi * u;
            }
        }
        (y, psi)
    }

    fn period(&self, v0: &[f64], steps: usize, keep: bool) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let mut v = v0.to_vec();
        let mut states = Vec::new();
        let mut psi = Vec::new();
        if keep {
            states.push(v.clone());
        }
        for i in 0..steps {
            let (nv, p) = self.step(&v, i as f64 * self.dt);
            v = nv;
            if keep {
                states.push(v.clone());
                psi.push(p);
            }
        }
        (v, states, psi)
    }
}

fn steps_for(drive: &Drive, dt: f64) -> Result<(usize, f64)> {
    let t = drive.period();
    let k = drive.harmonics().max(1);
    if !(dt > 0.0) || dt > t / (64.0 * k as f64) * (1.0 + 1e-12) {
        return Err(PerifluxError::invalid("dt", format!("must lie in (0, T/(64 K)] = (0, {:.3e}]", t / (64.0 * k as f64))));
    }
    let steps = (t / dt - 1e-9).ceil() as usize;
    Ok((steps, t / steps as f64))
}

/// Steps from `initial` (zero by default) until one period reproduces the
/// state to `tol`, then returns that period.
pub fn timestep_periodic(
    space: &DivFreeSpace,
    drive: Drive,
    nu: f64,
    dt: f64,
    max_periods: usize,
    tol: f64,
    initial: Option<&[f64]>,
) -> Result<PeriodicOrbit> {
    let (steps, dt) = steps_for(&drive, dt)?;
    let st = Stepper::new(space, drive, nu, dt)?;
    let mut v = initial.map_or_else(|| vec![0.0; space.dim()], |x| x.to_vec());
    let mut gaps = Vec::new();
    for p in 1..=max_periods {
        let (nv, states, psi) = st.period(&v, steps, true);
        let d: Vec<f64> = nv.iter().zip(&v).map(|(a, b)| a - b).collect();
        let nrm = space.inner(&nv, &nv).sqrt();
        let gap = if nrm > 0.0 { space.inner(&d, &d).sqrt() / nrm } else { 0.0 };
        gaps.push(gap);
        v = nv;
        if gap <= tol {
            return Ok(PeriodicOrbit {
                dt,
                steps_per_period: steps,
                periods_run: p,
                states,
                psi,
                gaps,
            });
        }
    }
    Err(PerifluxError::OracleNonconvergence {
        periods: max_periods,
        gap: gaps.last().copied().unwrap_or(f64::NAN),
    })
}

/// State after one period of stepping from `v0`.
pub fn period_map(space: &DivFreeSpace, drive: Drive, nu: f64, dt: f64, v0: &[f64]) -> Result<Vec<f64>> {
    let (steps, dt) = steps_for(&drive, dt)?;
    let st = Stepper::new(space, drive, nu, dt)?;
    Ok(st.period(v0, steps, false).0)
}

/// Per-period contraction of the unforced, unconstrained map measured by
/// power iteration from a random start; the last ratio is returned.
pub fn contraction_factor(
    space: &DivFreeSpace,
    nu: f64,
    period: f64,
    dt: f64,
    periods: usize,
    seed: u64,
) -> Result<f64> {
    let zero = ForcingCoefficients {
        period,
        k_f: 0,
        zero: vec![],
        cos: vec![],
        sin: vec![],
        load_zero: vec![0.0; space.dim()],
        load_cos: vec![],
        load_sin: vec![],
        dofs_zero: vec![],
        dofs: vec![],
        discarded: 0.0,
    };
    let drive = Drive::Force(&zero);
    let (steps, dt) = steps_for(&drive, dt)?;
    let st = Stepper::new(space, drive, nu, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..space.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut ratio = f64::NAN;
    for _ in 0..periods.max(1) {
        let n0 = space.inner(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= n0);
        v = st.period(&v, steps, false).0;
        ratio = space.inner(&v, &v).sqrt();
    }
    Ok(ratio)
}
