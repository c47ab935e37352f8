//! Periodic flux data `g(t) = p0 + sum p_k cos(omega_k t) + q_k sin(omega_k t)`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{PerifluxError, Result};

/// Fraction of the discrete signal energy the automatic harmonic count keeps.
pub const ENERGY_CAPTURE: f64 = 1.0 - 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSignal {
    pub period: f64,
    pub p0: f64,
    /// Cosine coefficients `p_1..p_K`.
    pub p: Vec<f64>,
    /// Sine coefficients `q_1..q_K`.
    pub q: Vec<f64>,
}

impl FluxSignal {
    pub fn new(period: f64, p0: f64, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(PerifluxError::invalid("T", "period must be positive"));
        }
        if p.len() != q.len() {
            return Err(PerifluxError::invalid("p_k, q_k", "cosine and sine lists differ in length"));
        }
        if p.is_empty() {
            return Err(PerifluxError::invalid("K", "at least one harmonic is required"));
        }
        if !(p0.is_finite() && p.iter().chain(&q).all(|v| v.is_finite())) {
            return Err(PerifluxError::invalid("flux", "coefficients must be finite"));
        }
        Ok(FluxSignal { period, p0, p, q })
    }

    /// Steady flux `g0` (one zero harmonic).
    pub fn constant(period: f64, g0: f64) -> Result<Self> {
        Self::new(period, g0, vec![0.0], vec![0.0])
    }

    pub fn harmonics(&self) -> usize {
        self.p.len()
    }

    pub fn omega(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    /// Phase `2 pi k t / T` with `t` reduced to one period first, so `t` and
    /// `t + T` give identical values whenever `t + T` is exact.
    pub fn phase(&self, k: usize, t: f64) -> f64 {
        let tau = t.rem_euclid(self.period);
        2.0 * PI * k as f64 * tau / self.period
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut g = self.p0;
        for k in 1..=self.harmonics() {
            let (s, c) = self.phase(k, t).sin_cos();
            g += self.p[k - 1] * c + self.q[k - 1] * s;
        }
        g
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let mut g = 0.0;
        for k in 1..=self.harmonics() {
            let w = self.omega(k);
            let (s, c) = self.phase(k, t).sin_cos();
            g += w * (-self.p[k - 1] * s + self.q[k - 1] * c);
        }
        g
    }

    /// `||g||^2` over one period.
    pub fn l2_sq(&self) -> f64 {
        let t = self.period;
        t * self.p0 * self.p0 + 0.5 * t * self.p.iter().chain(&self.q).map(|v| v * v).sum::<f64>()
    }

    /// `||g'||^2` over one period.
    pub fn derivative_l2_sq(&self) -> f64 {
        let t = self.period;
        (1..=self.harmonics())
            .map(|k| {
                let w = self.omega(k);
                0.5 * t * w * w * (self.p[k - 1].powi(2) + self.q[k - 1].powi(2))
            })
            .sum()
    }

    /// `||g||_{H^1}` over one period.
    pub fn h1_norm(&self) -> f64 {
        (self.l2_sq() + self.derivative_l2_sq()).sqrt()
    }

    pub fn max_abs_sampled(&self, n: usize) -> f64 {
        (0..n)
            .map(|i| self.eval(self.period * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Complex amplitude `p_k - i q_k`, so the harmonic is `Re(g_k e^{i omega t})`.
    pub fn complex(&self, k: usize) -> Complex64 {
        Complex64::new(self.p[k - 1], -self.q[k - 1])
    }

    pub fn is_zero(&self) -> bool {
        self.p0 == 0.0 && self.p.iter().chain(&self.q).all(|v| *v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        FluxSignal {
            period: self.period,
            p0: s * self.p0,
            p: self.p.iter().map(|v| s * v).collect(),
            q: self.q.iter().map(|v| s * v).collect(),
        }
    }
}

/// Fourier coefficients of uniform samples `g(i T / N)`, `i = 0..N`. With
/// `k = None` the smallest harmonic count keeping [`ENERGY_CAPTURE`] of the
/// signal energy is chosen.
pub fn flux_fourier(period: f64, samples: &[f64], k: Option<usize>) -> Result<FluxSignal> {
    let n = samples.len();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(PerifluxError::invalid("samples", "must be finite"));
    }
    let kmax = n / 4;
    if kmax == 0 {
        return Err(PerifluxError::invalid("samples", format!("{n} samples cannot resolve one harmonic")));
    }
    if let Some(k) = k {
        if k == 0 {
            return Err(PerifluxError::invalid("K", "at least one harmonic is required"));
        }
        if 4 * k > n {
            return Err(PerifluxError::invalid(
                "samples",
                format!("{n} samples alias {k} harmonics; need at least {}", 4 * k),
            ));
        }
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let p0 = buf[0].re / nf;
    let coef = |j: usize| (2.0 * buf[j].re / nf, -2.0 * buf[j].im / nf);
    let k = match k {
        Some(k) => k,
        None => {
            let total: f64 = samples.iter().map(|v| v * v).sum::<f64>() / nf;
            let mut kept = p0 * p0;
            let mut k = 1;
            while k < kmax {
                let (a, b) = coef(k);
                kept += 0.5 * (a * a + b * b);
                if kept >= ENERGY_CAPTURE * total {
                    break;
                }
                k += 1;
            }
            k
        }
    };
    let (p, q): (Vec<f64>, Vec<f64>) = (1..=k).map(coef).unzip();
    FluxSignal::new(period, p0, p, q)
}
