//! Relative differences between a computed field and a reference.

use serde::Serialize;

use crate::error::{PerifluxError, Result};
use crate::fields::{flux_profile, inner, VectorField};
use crate::geometry::MappedGrid;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct DiffReport {
    pub rel_l2: f64,
    pub rel_max: f64,
    pub rel_flux: f64,
}

fn rel(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn diff(a: &VectorField, b: &VectorField) -> VectorField {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.no_slip = a.no_slip && b.no_slip;
    d
}

/// `a` against the reference `b`.
pub fn compare(grid: &MappedGrid, a: &VectorField, b: &VectorField) -> Result<DiffReport> {
    compare_series(grid, std::slice::from_ref(a), std::slice::from_ref(b))
}

/// Space-time version over matching time samples: L2 sums over all samples,
/// max and flux over all samples.
pub fn compare_series(grid: &MappedGrid, a: &[VectorField], b: &[VectorField]) -> Result<DiffReport> {
    if a.len() != b.len() || a.is_empty() {
        return Err(PerifluxError::IncompatibleField("series differ in length".into()));
    }
    let (mut num, mut den, mut dmax, mut bmax, mut fd, mut fb) = (0.0, 0.0, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        x.check(grid)?;
        y.check(grid)?;
        let d = diff(x, y);
        num += inner(grid, &d, &d)?;
        den += inner(grid, y, y)?;
        dmax = dmax.max(d.max_abs());
        bmax = bmax.max(y.max_abs());
        let (px, py) = (flux_profile(grid, x)?, flux_profile(grid, y)?);
        for (u, v) in px.rows.iter().zip(&py.rows) {
            fd = fd.max((u - v).abs());
            fb = fb.max(v.abs());
        }
    }
    Ok(DiffReport {
        rel_l2: rel(num.sqrt(), den.sqrt()),
        rel_max: rel(dmax, bmax),
        rel_flux: rel(fd, fb),
    })
}
