//! Discrete Stokes operator `A = P(-Delta)` and its inverse.

use super::laplacian::{laplacian_dirichlet, stiffness_matrix};
use super::ops::{divergence_operator, Layout};
use super::projection::leray_project;
use super::space::DivFreeSpace;
use super::{ScalarField, Shape, VectorField};
use crate::error::{PerifluxError, Result};
use crate::geometry::MappedGrid;
use crate::linalg::{norm2, pcg, spmv, Skyline};

/// `P(-Delta u)` for a non-slip field, projected by the pressure Poisson route.
pub fn apply_stokes(grid: &MappedGrid, u: &VectorField, tol: f64) -> Result<VectorField> {
    u.check(grid)?;
    if !u.no_slip {
        return Err(PerifluxError::IncompatibleField("Stokes operator needs a non-slip field".into()));
    }
    let mut lap = laplacian_dirichlet(grid, u)?;
    lap.scale(-1.0);
    let mut out = leray_project(grid, &lap, tol)?.projected;
    // The image is only defined in the interior.
    for j in 0..grid.nzeta {
        out.ux[grid.x_idx(0, j)] = 0.0;
        out.ux[grid.x_idx(grid.nxi, j)] = 0.0;
    }
    Ok(out)
}

/// Solves `A v = P f`. The reduced system is solved directly; the Galerkin
/// residual is checked against `tol`.
pub fn stokes_solve(grid: &MappedGrid, f: &VectorField, tol: f64) -> Result<VectorField> {
    let space = DivFreeSpace::new(grid)?;
    space.solve_stokes(f, tol)
}

impl DivFreeSpace {
    /// Reduced `A v = P f` on this space.
    pub fn solve_stokes(&self, f: &VectorField, tol: f64) -> Result<VectorField> {
        if !(tol > 0.0) {
            return Err(PerifluxError::invalid("tol", "must be positive"));
        }
        let b = self.load_field(f)?;
        let x = self.solve_stiffness(&b);
        let r: Vec<f64> = self.apply_stiffness(&x).iter().zip(&b).map(|(a, c)| a - c).collect();
        let res = norm2(&r) / norm2(&b).max(f64::MIN_POSITIVE);
        if res > tol.max(1e-10) {
            return Err(PerifluxError::SolverFailure {
                context: "reduced Stokes solve".into(),
                residual: res,
                iterations: 1,
            });
        }
        Ok(self.field(&x))
    }
}

#[derive(Debug, Clone)]
pub struct UzawaReport {
    pub iterations: usize,
    pub residual: f64,
    /// Largest cell divergence of the velocity.
    pub divergence: f64,
    pub pressure: ScalarField,
}

/// Saddle-point Stokes solve by conjugate gradients on the pressure Schur
/// complement. Independent of the stream-function space; used as a cross-check.
pub fn stokes_solve_uzawa(
    grid: &MappedGrid,
    f: &VectorField,
    tol: f64,
    maxit: usize,
) -> Result<(VectorField, UzawaReport)> {
    f.check(grid)?;
    let lay = Layout::of(grid);
    let k = stiffness_matrix(grid);
    let kf = Skyline::factor(&k, "vector Laplacian")?;
    let b = divergence_operator(grid);
    let bt = b.transpose_view().to_csr();
    let mass = lay.mass(grid);
    let mf: Vec<f64> = lay.to_dofs(grid, f).iter().zip(&mass).map(|(a, m)| a * m).collect();
    let u0 = kf.solve(&mf);
    let rhs: Vec<f64> = spmv(&b, &u0).iter().map(|v| -v).collect();
    let apply = |p: &[f64], y: &mut [f64]| {
        let w = kf.solve(&spmv(&bt, p));
        y.copy_from_slice(&spmv(&b, &w));
    };
    let diag = vec![1.0; grid.n_center()];
    let (p, out) = pcg(apply, &diag, &rhs, tol, maxit, true);
    if !out.converged {
        return Err(PerifluxError::SolverFailure {
            context: "Uzawa pressure iteration".into(),
            residual: out.relative_residual,
            iterations: out.iterations,
        });
    }
    let mut load = mf;
    for (l, v) in load.iter_mut().zip(spmv(&bt, &p)) {
        *l += v;
    }
    let u = kf.solve(&load);
    let div = spmv(&b, &u);
    let scale = norm2(&u).max(f64::MIN_POSITIVE);
    let divergence = div
        .iter()
        .enumerate()
        .map(|(c, d)| (d * grid.normalization() / grid.w_center[c]).abs())
        .fold(0.0, f64::max);
    Ok((
        lay.from_dofs(grid, &u),
        UzawaReport {
            iterations: out.iterations,
            residual: norm2(&div) / scale,
            divergence,
            pressure: ScalarField {
                shape: Shape::of(grid),
                values: p,
            },
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{inner, norm};
    use crate::geometry::{build_grid, GeometryKind, PipeProfile};

    fn wavy(kind: GeometryKind) -> MappedGrid {
        let p = PipeProfile::sinusoidal(1.0, 0.25, 1.0).unwrap();
        build_grid(&p, kind, 12, 12).unwrap()
    }

    #[test]
    fn reduced_and_saddle_point_solves_agree() {
        for kind in [GeometryKind::Planar2D, GeometryKind::Axisym] {
            let g = wavy(kind);
            let s = DivFreeSpace::new(&g).unwrap();
            let f = VectorField::random(&g, 11);
            let v = s.solve_stokes(&f, 1e-10).unwrap();
            let (w, rep) = stokes_solve_uzawa(&g, &f, 1e-13, 2000).unwrap();
            assert!(rep.divergence < 1e-8);
            let mut d = v.clone();
            d.axpy(-1.0, &w);
            assert!(norm(&g, &d).unwrap() < 1e-8 * norm(&g, &v).unwrap());
        }
    }

    #[test]
    fn stokes_operator_inverts_the_solve() {
        let g = wavy(GeometryKind::Planar2D);
        let f = VectorField::random(&g, 5);
        let v = stokes_solve(&g, &f, 1e-10).unwrap();
        let av = apply_stokes(&g, &v, 1e-13).unwrap();
        // A v equals P f: compare against the projection of f.
        let pf = leray_project(&g, &f, 1e-13).unwrap().projected;
        let mut d = av.clone();
        d.axpy(-1.0, &pf);
        assert!(norm(&g, &d).unwrap() < 1e-7 * norm(&g, &pf).unwrap());
    }

    #[test]
    fn stokes_operator_is_symmetric_positive() {
        let g = wavy(GeometryKind::Axisym);
        let s = DivFreeSpace::new(&g).unwrap();
        let u = s.field(&s.project(&VectorField::random(&g, 1)).unwrap());
        let v = s.field(&s.project(&VectorField::random(&g, 2)).unwrap());
        let au = apply_stokes(&g, &u, 1e-13).unwrap();
        let av = apply_stokes(&g, &v, 1e-13).unwrap();
        let a = inner(&g, &au, &v).unwrap();
        let b = inner(&g, &av, &u).unwrap();
        assert!((a - b).abs() < 1e-8 * a.abs());
        assert!(inner(&g, &au, &u).unwrap() > 0.0);
    }

    #[test]
    fn zero_load_gives_zero() {
        let g = wavy(GeometryKind::Planar2D);
        let v = stokes_solve(&g, &VectorField::zeros(&g), 1e-10).unwrap();
        assert_eq!(v.max_abs(), 0.0);
    }

    #[test]
    fn channel_poiseuille_profile() {
        let err = |n: usize| {
            let p = PipeProfile::straight(1.0, 1.0).unwrap();
            let g = build_grid(&p, GeometryKind::Planar2D, n, 8).unwrap();
            let v = stokes_solve(&g, &crate::fields::unit_axial_field(&g), 1e-10).unwrap();
            let mut e: f64 = 0.0;
            for j in 0..g.nzeta {
                for i in 0..g.nxi {
                    let x = g.xi_center(i);
                    e = e.max((v.uz[g.c_idx(i, j)] - 0.5 * (1.0 - x * x)).abs());
                }
            }
            e
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 < 1e-2 && e1 / e2 > 3.5, "{e1} {e2}");
    }
}
