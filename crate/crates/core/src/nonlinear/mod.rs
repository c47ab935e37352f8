//! Time-periodic Navier-Stokes flow with prescribed flux by Picard iteration
//! on `w -> T(-w . grad w)`, starting from `w = 0`.

mod convective;

pub use convective::convective_term;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PerifluxError, Result};
use crate::fields::{norm, DivFreeSpace, VectorField};
use crate::forcing::{forcing_coeffs, solve_t, ForcingCoefficients};
use crate::harmonic::{momentum_residual_forced, FluxSignal, HarmonicSolution, Method};
use crate::linalg::dot;
use crate::spectrum::SpectralBasis;

/// Blow-up threshold in units of the ball radius.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// Harmonic count of the iterates: twice the flux bandwidth.
pub fn ns_harmonics(flux: &FluxSignal) -> usize {
    2 * flux.harmonics()
}

/// Discrete `max_t ||grad w(t)||` over the sample times and
/// `(int ||A w||^2)^{1/2}` from Parseval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CombinedNorm {
    pub sup_grad: f64,
    pub stokes_l2: f64,
}

impl CombinedNorm {
    pub fn total(&self) -> f64 {
        self.sup_grad + self.stokes_l2
    }
}

pub fn combined_norm(space: &DivFreeSpace, w: &HarmonicSolution, nt: usize) -> CombinedNorm {
    let t = w.period;
    let sq = |x: &[f64]| {
        let kx = space.apply_stiffness(x);
        dot(&kx, &space.solve_mass(&kx))
    };
    let mut a2 = t * sq(&w.a0);
    for h in &w.harmonics {
        a2 += 0.5 * t * (sq(&h.a) + sq(&h.b));
    }
    let sup = (0..nt)
        .into_par_iter()
        .map(|i| {
            let x = w.reduced(t * i as f64 / nt as f64);
            space.energy(&x, &x).max(0.0).sqrt()
        })
        .reduce(|| 0.0, f64::max);
    CombinedNorm {
        sup_grad: sup,
        stokes_l2: a2.max(0.0).sqrt(),
    }
}

/// Fields of `w` at `nt` uniform times.
pub fn sample_fields(space: &DivFreeSpace, w: &HarmonicSolution, nt: usize) -> Vec<VectorField> {
    (0..nt)
        .into_par_iter()
        .map(|i| w.evaluate(space, w.period * i as f64 / nt as f64))
        .collect()
}

/// Fourier data of `-w . grad w` with `k` harmonics from `4 k` samples.
pub fn nonlinear_forcing(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    w: &HarmonicSolution,
    k: usize,
) -> Result<ForcingCoefficients> {
    let nt = 4 * k;
    let samples: Result<Vec<VectorField>> = sample_fields(space, w, nt)
        .into_par_iter()
        .map(|u| {
            let mut c = convective_term(&space.grid, &u)?;
            c.scale(-1.0);
            Ok(c)
        })
        .collect();
    forcing_coeffs(space, basis, w.period, &samples?, Some(k))
}

#[derive(Debug, Clone)]
pub struct PicardState {
    pub n: usize,
    pub solution: HarmonicSolution,
    pub norm: f64,
    pub increments: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Ball radius, twice the Stokes norm; set by the first step.
    pub delta: f64,
    pub c_nu_est: f64,
    pub discarded: f64,
}

impl PicardState {
    pub fn initial(space: &DivFreeSpace, basis: &SpectralBasis, flux: &FluxSignal, nu: f64) -> Self {
        let k = ns_harmonics(flux);
        let n = space.dim();
        let harmonics = (1..=k)
            .map(|k| crate::harmonic::zero_harmonic(k, flux.omega(k), n))
            .collect();
        PicardState {
            n: 0,
            solution: HarmonicSolution {
                method: Method::Resolvent,
                nu,
                period: flux.period,
                kappa: space.kappa(),
                pez_norm: basis.pez_norm,
                c1sq: basis.c1sq,
                c_tilde: 0.0,
                a0: vec![0.0; n],
                psi0: 0.0,
                harmonics,
            },
            norm: 0.0,
            increments: Vec::new(),
            ratios: Vec::new(),
            delta: f64::NAN,
            c_nu_est: 0.0,
            discarded: 0.0,
        }
    }
}

pub fn picard_step(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    state: &PicardState,
    flux: &FluxSignal,
    nu: f64,
) -> Result<PicardState> {
    let k = ns_harmonics(flux);
    let nt = 4 * k;
    let f = nonlinear_forcing(space, basis, &state.solution, k)?;
    let (next, _) = solve_t(space, basis, &f, flux, nu, Method::Resolvent, false)?;
    let nrm = combined_norm(space, &next, nt).total();
    let inc = combined_norm(space, &next.combine(-1.0, &state.solution)?, nt).total();
    let delta = if state.n == 0 { 2.0 * nrm } else { state.delta };
    if nrm > DIVERGENCE_FACTOR * delta {
        return Err(PerifluxError::DivergenceDetected {
            iteration: state.n + 1,
            norm: nrm,
            limit: DIVERGENCE_FACTOR * delta,
        });
    }
    let mut ratios = state.ratios.clone();
    let mut c_nu = state.c_nu_est;
    let gh1 = flux.h1_norm();
    if delta * delta + gh1 > 0.0 {
        c_nu = c_nu.max(nrm / (delta * delta + gh1));
    }
    if let Some(prev) = state.increments.last() {
        if *prev > 0.0 {
            let q = inc / prev;
            ratios.push(q);
            if delta > 0.0 {
                c_nu = c_nu.max(q / delta);
            }
        }
    }
    let mut increments = state.increments.clone();
    increments.push(inc);
    Ok(PicardState {
        n: state.n + 1,
        solution: next,
        norm: nrm,
        increments,
        ratios,
        delta,
        c_nu_est: c_nu,
        discarded: f.discarded,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NsReport {
    pub iterations: usize,
    pub increments: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest contraction ratio above the rounding floor.
    pub q_bar: f64,
    pub delta: f64,
    pub c_nu_est: f64,
    pub flux_h1: f64,
    /// `||g||_{H^1} < 1 / (4 c^2)` with the measured constant.
    pub smallness_holds: bool,
    /// `c delta < 1/2` with the measured constant.
    pub ball_condition_holds: bool,
    /// Last increment relative to the solution norm.
    pub fixed_point_residual: f64,
    pub momentum_residual: f64,
    /// `||w . grad w|| / (||grad w||_C ||grad w||^{1/4} ||A w||^{3/4})`.
    pub interpolation_constant: f64,
    pub discarded_forcing: f64,
}

/// Picard iteration to relative increment `tol`.
pub fn solve_ns(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    flux: &FluxSignal,
    nu: f64,
    tol: f64,
    maxit: usize,
) -> Result<(HarmonicSolution, NsReport)> {
    if !(tol > 0.0) {
        return Err(PerifluxError::invalid("tol", "must be positive"));
    }
    if maxit == 0 {
        return Err(PerifluxError::invalid("maxit", "must be positive"));
    }
    let mut state = PicardState::initial(space, basis, flux, nu);
    loop {
        state = picard_step(space, basis, &state, flux, nu)?;
        let inc = *state.increments.last().expect("one step taken");
        if inc <= tol * state.norm || state.norm == 0.0 {
            break;
        }
        if state.n >= maxit {
            return Err(PerifluxError::MaxitExceeded {
                maxit,
                increment: inc / state.norm,
            });
        }
    }
    let report = report(space, basis, &state, flux, tol)?;
    Ok((state.solution, report))
}

fn report(
    space: &DivFreeSpace,
    basis: &SpectralBasis,
    state: &PicardState,
    flux: &FluxSignal,
    tol: f64,
) -> Result<NsReport> {
    let w = &state.solution;
    let k = ns_harmonics(flux);
    let nt = 4 * k;
    let f = nonlinear_forcing(space, basis, w, k)?;
    let mut mom: f64 = 0.0;
    for kk in 0..=w.harmonics.len() {
        let amp = (kk <= f.k_f).then(|| f.amplitude(kk));
        mom = mom.max(momentum_residual_forced(space, w, kk, amp.as_deref())?);
    }
    // Ratios below this floor measure rounding, not contraction.
    let floor = 1e3 * tol.max(1e-14) * state.norm;
    let q_bar = state
        .ratios
        .iter()
        .zip(&state.increments[1..])
        .filter(|(_, inc)| **inc > floor)
        .map(|(q, _)| *q)
        .fold(0.0, f64::max);
    let cn = combined_norm(space, w, nt);
    let mut conv_sq = 0.0;
    let mut grad_sq = 0.0;
    for u in sample_fields(space, w, nt) {
        conv_sq += norm(&space.grid, &convective_term(&space.grid, &u)?)?.powi(2);
    }
    for i in 0..nt {
        let x = w.reduced(w.period * i as f64 / nt as f64);
        grad_sq += space.energy(&x, &x);
    }
    let dt = w.period / nt as f64;
    let (conv, grad) = ((conv_sq * dt).sqrt(), (grad_sq * dt).sqrt());
    let denom = cn.sup_grad * grad.powf(0.25) * cn.stokes_l2.powf(0.75);
    let gh1 = flux.h1_norm();
    let c = state.c_nu_est;
    Ok(NsReport {
        iterations: state.n,
        increments: state.increments.clone(),
        ratios: state.ratios.clone(),
        q_bar,
        delta: state.delta,
        c_nu_est: c,
        flux_h1: gh1,
        smallness_holds: c == 0.0 || gh1 < 1.0 / (4.0 * c * c),
        ball_condition_holds: c * state.delta < 0.5,
        fixed_point_residual: if state.norm > 0.0 {
            state.increments.last().copied().unwrap_or(0.0) / state.norm
        } else {
            0.0
        },
        momentum_residual: mom,
        interpolation_constant: if denom > 0.0 { conv / denom } else { 0.0 },
        discarded_forcing: state.discarded,
    })
}
