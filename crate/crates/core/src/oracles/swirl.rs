//! Free decay of the swirl component in a pipe, with a per-step energy audit.
//!
//! The swirl obeys `d/dt v_theta = nu (Delta - 1/rho^2) v_theta` on its own,
//! so its energy satisfies
//! `d/dt ||v_theta||^2 = -2 nu (||d_rho v||^2 + ||d_z v||^2 + ||v / rho||^2)`.

use serde::Serialize;

use crate::error::{PerifluxError, Result};
use crate::fields::{DivFreeSpace, VectorField};
use crate::geometry::GeometryKind;
use crate::harmonic::HarmonicSolution;

#[derive(Debug, Clone, Serialize)]
pub struct SwirlReport {
    pub nu: f64,
    pub dt: f64,
    pub steps: usize,
    /// `||v_theta||^2` at every step, starting with the initial value.
    pub energies: Vec<f64>,
    pub monotone: bool,
    /// Largest `|dE + dt nu <grad(v^n + v^{n+1}), grad(v^n + v^{n+1})> / 2|`
    /// relative to `E_0`; the scheme's exact balance, rounding level.
    pub midpoint_defect: f64,
    /// Accumulated `|dE + dt (D(t_n) + D(t_{n+1})) / 2|` with the dissipation
    /// `D = 2 nu ||grad v||^2`, relative to `E_0`; `O(dt^2)`.
    pub trapezoid_defect: f64,
    /// `E_final / E_0`.
    pub final_ratio: f64,
}

fn swirl_part(space: &DivFreeSpace, x: &mut [f64]) {
    let r = space.swirl_range();
    for (i, v) in x.iter_mut().enumerate() {
        if !r.contains(&i) {
            *v = 0.0;
        }
    }
}

/// Crank-Nicolson decay of the swirl of `initial` over `steps` steps, stopping
/// early once the energy drops below `1e-10` of its initial value.
pub fn swirl_decay_check(
    space: &DivFreeSpace,
    initial: &VectorField,
    nu: f64,
    dt: f64,
    steps: usize,
) -> Result<SwirlReport> {
    if space.grid.kind != GeometryKind::Axisym {
        return Err(PerifluxError::InvalidOracleUse("swirl decay needs a pipe grid".into()));
    }
    if !(nu > 0.0 && dt > 0.0) {
        return Err(PerifluxError::invalid("nu, dt", "must be positive"));
    }
    let mut x = space.project(initial)?;
    swirl_part(space, &mut x);
    let solve = space.shifted(1.0, 0.5 * dt * nu)?;
    let e0 = space.inner(&x, &x);
    let mut energies = vec![e0];
    let (mut mid, mut trap_sum) = (0.0f64, 0.0f64);
    let mut grad = space.energy(&x, &x);
    let mut taken = 0;
    if e0 > 0.0 {
        for _ in 0..steps {
            let mx = space.apply_mass(&x);
            let kx = space.apply_stiffness(&x);
            let rhs: Vec<f64> = mx.iter().zip(&kx).map(|(m, k)| m - 0.5 * dt * nu * k).collect();
            let mut y = solve.solve(&rhs);
            swirl_part(space, &mut y);
            let e = space.inner(&y, &y);
            let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let de = e - energies.last().copied().unwrap_or(e0);
            mid = mid.max((de + 0.5 * dt * nu * space.energy(&s, &s)).abs() / e0);
            let g1 = space.energy(&y, &y);
            trap_sum += de + dt * nu * (grad + g1);
            grad = g1;
            energies.push(e);
            x = y;
            taken += 1;
            if e <= 1e-10 * e0 {
                break;
            }
        }
    }
    let monotone = energies.windows(2).all(|w| w[1] <= w[0]);
    Ok(SwirlReport {
        nu,
        dt,
        steps: taken,
        final_ratio: if e0 > 0.0 { energies.last().copied().unwrap_or(0.0) / e0 } else { 0.0 },
        energies,
        monotone,
        midpoint_defect: mid,
        trapezoid_defect: if e0 > 0.0 { trap_sum.abs() / e0 } else { 0.0 },
    })
}

/// Largest swirl coefficient of a frequency-domain solution.
pub fn max_swirl(space: &DivFreeSpace, sol: &HarmonicSolution) -> f64 {
    let r = space.swirl_range();
    let mut m = sol.a0[r.clone()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for h in &sol.harmonics {
        for v in h.a[r.clone()].iter().chain(&h.b[r.clone()]) {
            m = m.max(v.abs());
        }
    }
    m
}
