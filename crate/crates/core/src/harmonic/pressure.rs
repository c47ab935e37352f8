//! Splitting a pressure into a periodic part and a linear axial drop,
//! `p = p~ - b z`.

use serde::{Deserialize, Serialize};

use crate::error::{PerifluxError, Result};

/// Spread of the axial mean gradient across the section above which the
/// pressure is rejected.
pub const DECOMPOSE_TOL: f64 = 1e-9;

/// Pressure on a tensor grid, `values[ix][iz]`. The axial nodes run from
/// `z = 0` to `z = L` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureSamples {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl PressureSamples {
    pub fn from_fn(x: Vec<f64>, z: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = x.iter().map(|xi| z.iter().map(|zj| f(*xi, *zj)).collect()).collect();
        PressureSamples { x, z, values }
    }

    fn check(&self) -> Result<()> {
        if self.z.len() < 2 || self.x.is_empty() {
            return Err(PerifluxError::invalid("pressure", "need at least one section point and two axial nodes"));
        }
        if self.values.len() != self.x.len() || self.values.iter().any(|r| r.len() != self.z.len()) {
            return Err(PerifluxError::invalid("pressure", "values do not match the sample grid"));
        }
        if self.z[0] != 0.0 || self.z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PerifluxError::invalid("pressure", "axial nodes must increase from z = 0"));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        *self.z.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureDecomposition {
    /// Mean axial pressure drop per unit length.
    pub b: f64,
    /// Constant removed so that `p~(x_0, 0) = 0`.
    pub p0_gauge: f64,
    pub p_tilde: PressureSamples,
}

pub fn pressure_decompose(p: &PressureSamples) -> Result<PressureDecomposition> {
    p.check()?;
    let l = p.length();
    let last = p.z.len() - 1;
    let a0: Vec<f64> = p.values.iter().map(|r| (r[last] - r[0]) / l).collect();
    let (lo, hi) = a0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let spread = hi - lo;
    if !(spread <= DECOMPOSE_TOL * hi.abs().max(lo.abs()).max(1.0)) {
        return Err(PerifluxError::NotDecomposable { spread });
    }
    let b = -a0.iter().sum::<f64>() / a0.len() as f64;
    let p0_gauge = p.values[0][0];
    let values = p
        .values
        .iter()
        .map(|r| r.iter().zip(&p.z).map(|(v, z)| v + b * z - p0_gauge).collect())
        .collect();
    Ok(PressureDecomposition {
        b,
        p0_gauge,
        p_tilde: PressureSamples {
            x: p.x.clone(),
            z: p.z.clone(),
            values,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn nodes(n: usize, l: f64) -> Vec<f64> {
        (0..=n).map(|i| l * i as f64 / n as f64).collect()
    }

    #[test]
    fn round_trip() {
        let x: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        let l = 2.0;
        let pt = |x: f64, z: f64| (PI * z).sin() * (1.0 + x * x) + x.powi(3) * (PI * z).cos();
        let b = 0.7;
        let p = PressureSamples::from_fn(x, nodes(32, l), |x, z| pt(x, z) - b * z + 5.0);
        let d = pressure_decompose(&p).unwrap();
        assert!((d.b - b).abs() < 1e-12);
        let g = pt(-1.0, 0.0);
        for (i, r) in d.p_tilde.values.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                assert!((v - (pt(p.x[i], p.z[j]) - g)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn section_dependent_gradient_is_rejected() {
        let p = PressureSamples::from_fn(vec![0.0, 0.5, 1.0], nodes(8, 1.0), |x, z| -(1.0 + 0.1 * x) * z);
        match pressure_decompose(&p) {
            Err(PerifluxError::NotDecomposable { spread }) => assert!((spread - 0.1).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_samples() {
        let mut p = PressureSamples::from_fn(vec![0.0], nodes(4, 1.0), |_, z| z);
        p.values[0].pop();
        assert!(pressure_decompose(&p).is_err());
    }
}
