//! Helmholtz-Leray projection by a discrete pressure Poisson solve.

use super::ops::{divergence_operator, xflux_coefs, Layout};
use super::{ScalarField, Shape, VectorField};
use crate::error::{PerifluxError, Result};
use crate::geometry::MappedGrid;
use crate::linalg::{pcg, spmv, spmv_into};

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// Solenoidal part with zero normal wall flux.
    pub projected: VectorField,
    /// Potential with `u = projected + grad phi` (zero mean).
    pub phi: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

/// Projects `u` onto discretely divergence-free fields with zero normal flux
/// through the wall. Swirl is left untouched. The wall value of the transverse
/// component is replaced by its tangential part, so the result is not flagged
/// non-slip.
pub fn leray_project(grid: &MappedGrid, u: &VectorField, tol: f64) -> Result<ProjectionResult> {
    u.check(grid)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(PerifluxError::invalid("tol", "must lie in (0, 1)"));
    }
    let lay = Layout::of(grid);
    let b = divergence_operator(grid);
    let bt = b.transpose_view().to_csr();
    let norm = grid.normalization();
    let inv_w: Vec<f64> = lay
        .mass(grid)
        .iter()
        .map(|m| if *m > 0.0 { norm / m } else { 0.0 })
        .collect();
    let x = lay.to_dofs(grid, u);
    let rhs: Vec<f64> = spmv(&b, &x).iter().map(|v| -v).collect();
    let mut diag = vec![0.0; grid.n_center()];
    for (row, d) in b.outer_iterator().zip(diag.iter_mut()) {
        *d = row.iter().map(|(j, v)| v * v * inv_w[j]).sum();
    }
    let mut tmp = vec![0.0; lay.len()];
    let apply = |p: &[f64], y: &mut [f64]| {
        let mut t = vec![0.0; bt.rows()];
        spmv_into(&bt, p, &mut t);
        for (v, w) in t.iter_mut().zip(&inv_w) {
            *v *= w;
        }
        spmv_into(&b, &t, y);
    };
    let maxit = 20 * grid.n_center() + 100;
    let (phi, out) = pcg(apply, &diag, &rhs, tol, maxit, true);
    if !out.converged {
        return Err(PerifluxError::SolverFailure {
            context: "pressure Poisson solve".into(),
            residual: out.relative_residual,
            iterations: out.iterations,
        });
    }
    spmv_into(&bt, &phi, &mut tmp);
    let y: Vec<f64> = x
        .iter()
        .zip(tmp.iter().zip(&inv_w))
        .map(|(xi, (t, w))| xi + t * w)
        .collect();
    let mut projected = lay.from_dofs(grid, &y);
    projected.utheta.clone_from(&u.utheta);
    for j in 0..grid.nzeta {
        let up = grid.up(j);
        for (a, cell) in [(0usize, 0usize), (grid.nxi, grid.nxi - 1)] {
            let (alpha, beta) = xflux_coefs(grid, a, j);
            let idx = grid.x_idx(a, j);
            projected.ux[idx] = if alpha.abs() > 0.0 {
                let wall_uz = 0.5 * (y[lay.uz(cell, j)] + y[lay.uz(cell, up)]);
                beta * wall_uz / alpha
            } else {
                0.0
            };
        }
    }
    projected.no_slip = false;
    Ok(ProjectionResult {
        projected,
        phi: ScalarField {
            shape: Shape::of(grid),
            values: phi,
        },
        iterations: out.iterations,
        residual: out.relative_residual,
    })
}
