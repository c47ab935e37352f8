//! Space-time norms of a periodic solution against the flux data.
//!
//! Time integrals over one period come from Parseval on the harmonic
//! coefficients, so no time quadrature is involved.

use serde::Serialize;

use super::{FluxSignal, HarmonicSolution};
use crate::fields::DivFreeSpace;
use crate::linalg::{dot, spmv};

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub nu: f64,
    /// `||Delta_h v||^2 / (||g||^2 + ||g'||^2 / nu^2)`.
    pub r1: f64,
    /// Same with the discrete Stokes operator in place of the Laplacian.
    pub r1_stokes: f64,
    /// `||v'||^2 / (nu^2 ||g||^2 + ||g'||^2)`.
    pub r2: f64,
    /// `||grad v||^2 / ((1 + nu) ||g||^2 + (1/nu + 1/nu^2) ||g'||^2)`.
    pub r3: f64,
    /// `sup_t ||grad v(t)||^2` over the same denominator as `r3`.
    pub r3_sup: f64,
    pub lap_l2_sq: f64,
    pub stokes_l2_sq: f64,
    pub dt_l2_sq: f64,
    pub grad_l2_sq: f64,
    pub sup_grad_sq: f64,
    pub g_l2_sq: f64,
    pub gp_l2_sq: f64,
}

struct Norms {
    lap: f64,
    stokes: f64,
    grad: f64,
    l2: f64,
}

fn norms(space: &DivFreeSpace, x: &[f64]) -> Norms {
    let u = space.lift(x);
    let ku = spmv(space.full_stiffness(), &u);
    let lap = ku.iter().zip(space.full_mass()).map(|(k, m)| k * k / m).sum();
    let kx = space.apply_stiffness(x);
    let stokes = dot(&kx, &space.solve_mass(&kx));
    Norms {
        lap,
        stokes,
        grad: dot(&kx, x),
        l2: space.inner(x, x),
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// `sup_t` is taken over `nt` uniform samples of one period.
pub fn verify_estimates(space: &DivFreeSpace, sol: &HarmonicSolution, flux: &FluxSignal, nt: usize) -> EstimateReport {
    let t = sol.period;
    let nu = sol.nu;
    let n0 = norms(space, &sol.a0);
    let (mut lap, mut stokes, mut grad) = (t * n0.lap, t * n0.stokes, t * n0.grad);
    let mut dt = 0.0;
    for h in &sol.harmonics {
        for c in [&h.a, &h.b] {
            let n = norms(space, c);
            lap += 0.5 * t * n.lap;
            stokes += 0.5 * t * n.stokes;
            grad += 0.5 * t * n.grad;
            dt += 0.5 * t * h.omega * h.omega * n.l2;
        }
    }
    let sup_grad = (0..nt.max(1))
        .map(|i| {
            let x = sol.reduced(t * i as f64 / nt.max(1) as f64);
            space.energy(&x, &x)
        })
        .fold(0.0, f64::max);
    let g2 = flux.l2_sq();
    let gp2 = flux.derivative_l2_sq();
    let d3 = (1.0 + nu) * g2 + (1.0 / nu + 1.0 / (nu * nu)) * gp2;
    EstimateReport {
        nu,
        r1: ratio(lap, g2 + gp2 / (nu * nu)),
        r1_stokes: ratio(stokes, g2 + gp2 / (nu * nu)),
        r2: ratio(dt, nu * nu * g2 + gp2),
        r3: ratio(grad, d3),
        r3_sup: ratio(sup_grad, d3),
        lap_l2_sq: lap,
        stokes_l2_sq: stokes,
        dt_l2_sq: dt,
        grad_l2_sq: grad,
        sup_grad_sq: sup_grad,
        g_l2_sq: g2,
        gp_l2_sq: gp2,
    }
}
