//! Vector Laplacian with no-slip walls, assembled from the Dirichlet energy
//! `int |grad u|^2` of each physical component in mapped coordinates.
//!
//! For a component `c(xi, zeta)` the energy density times the volume factor is
//! `A c_xi^2 + 2 B c_xi c_zeta + C c_zeta^2`; differences along xi-edges and
//! zeta-edges carry the `A` and `C` parts, the cross term sits on the corners
//! between them. Axisymmetric radial and swirl components add `c^2 / rho^2`.

use sprs::{CsMat, TriMat};
use std::f64::consts::PI;

use super::ops::Layout;
use super::VectorField;
use crate::error::Result;
use crate::geometry::{GeometryKind, MappedGrid};
use crate::linalg::spmv;

/// Unknown nodes of one component on its own lattice.
struct Lattice {
    /// Reference positions of the unknown nodes across the section.
    xi: Vec<f64>,
    /// Position of a zero-value boundary node on each side, if any.
    left: Option<f64>,
    right: Option<f64>,
    /// Axial position of row `m` is `(m + offset) * dzeta`.
    offset: f64,
    mass_term: bool,
    dof: Box<dyn Fn(usize, usize) -> usize>,
}

fn lattices(grid: &MappedGrid) -> Vec<Lattice> {
    let lay = Layout::of(grid);
    let faces: Vec<f64> = (1..grid.nxi).map(|a| grid.xi_face(a)).collect();
    let centers: Vec<f64> = (0..grid.nxi).map(|i| grid.xi_center(i)).collect();
    let (lo, hi) = (grid.xi_face(0), grid.xi_face(grid.nxi));
    let mut out = Vec::new();
    match grid.kind {
        GeometryKind::Planar2D => {
            out.push(Lattice {
                xi: faces,
                left: Some(lo),
                right: Some(hi),
                offset: 0.5,
                mass_term: false,
                dof: Box::new(move |n, m| lay.ux(n + 1, m)),
            });
            out.push(Lattice {
                xi: centers,
                left: Some(lo),
                right: Some(hi),
                offset: 0.0,
                mass_term: false,
                dof: Box::new(move |n, m| lay.uz(n, m)),
            });
        }
        GeometryKind::Axisym => {
            out.push(Lattice {
                xi: faces,
                left: Some(0.0),
                right: Some(hi),
                offset: 0.5,
                mass_term: true,
                dof: Box::new(move |n, m| lay.ux(n + 1, m)),
            });
            // Axial velocity has a symmetry condition on the axis: no edge there.
            out.push(Lattice {
                xi: centers.clone(),
                left: None,
                right: Some(hi),
                offset: 0.0,
                mass_term: false,
                dof: Box::new(move |n, m| lay.uz(n, m)),
            });
            out.push(Lattice {
                xi: centers,
                left: Some(0.0),
                right: Some(hi),
                offset: 0.5,
                mass_term: true,
                dof: Box::new(move |n, m| lay.ut(n, m)),
            });
        }
    }
    out
}

/// `(A, B, C)` of the mapped Dirichlet energy at `(xi, zeta)`, before normalization.
fn energy_coefs(grid: &MappedGrid, xi: f64, zeta: f64) -> (f64, f64, f64) {
    let (r, dr) = grid.profile.eval(zeta);
    match grid.kind {
        GeometryKind::Planar2D => ((1.0 + xi * xi * dr * dr) / r, -xi * dr, r),
        GeometryKind::Axisym => {
            let w = 2.0 * PI * xi;
            (w * (1.0 + xi * xi * dr * dr), -w * xi * r * dr, w * r * r)
        }
    }
}

/// Accumulates `coef * (sum a_i c_i) * (sum b_j c_j)` into a symmetric matrix.
struct Quad {
    t: TriMat<f64>,
}

impl Quad {
    fn add(&mut self, coef: f64, a: &[(usize, f64)], b: &[(usize, f64)]) {
        for &(i, x) in a {
            for &(j, y) in b {
                let v = 0.5 * coef * x * y;
                self.t.add_triplet(i, j, v);
                self.t.add_triplet(j, i, v);
            }
        }
    }
}

/// Symmetric positive definite stiffness `K` on the interior unknowns with
/// `u^T K v = <grad u, grad v>` (normalized measure).
pub fn stiffness_matrix(grid: &MappedGrid) -> CsMat<f64> {
    let lay = Layout::of(grid);
    let mut q = Quad {
        t: TriMat::new((lay.len(), lay.len())),
    };
    let (dz, dx) = (grid.dzeta, grid.dxi);
    let nz = grid.nzeta;
    for lat in lattices(grid) {
        let nn = lat.xi.len();
        // Edges across the section: (left node, right node, left xi, right xi); None is a wall value.
        let mut edges: Vec<(Option<usize>, Option<usize>, f64, f64)> = Vec::new();
        if let Some(x0) = lat.left {
            edges.push((None, Some(0), x0, lat.xi[0]));
        }
        for n in 0..nn - 1 {
            edges.push((Some(n), Some(n + 1), lat.xi[n], lat.xi[n + 1]));
        }
        if let Some(x1) = lat.right {
            edges.push((Some(nn - 1), None, lat.xi[nn - 1], x1));
        }
        let diff = |p: Option<usize>, q: Option<usize>, m: usize| -> Vec<(usize, f64)> {
            let mut v = Vec::with_capacity(2);
            if let Some(q) = q {
                v.push(((lat.dof)(q, m), 1.0));
            }
            if let Some(p) = p {
                v.push(((lat.dof)(p, m), -1.0));
            }
            v
        };
        for m in 0..nz {
            let mu = if m + 1 == nz { 0 } else { m + 1 };
            let zeta = (m as f64 + lat.offset) * dz;
            let zeta_mid = zeta + 0.5 * dz;
            for &(p, qn, xa, xb) in &edges {
                let len = xb - xa;
                let xm = 0.5 * (xa + xb);
                let (a, _, _) = energy_coefs(grid, xm, zeta);
                let d = diff(p, qn, m);
                q.add(a * dz / len, &d, &d);
                // Corner between rows m and m+1 on this edge.
                let (_, b, _) = energy_coefs(grid, xm, zeta_mid);
                let mut dxi_avg = diff(p, qn, m);
                dxi_avg.extend(diff(p, qn, mu));
                let mut dzeta_avg = Vec::new();
                for node in [p, qn].into_iter().flatten() {
                    dzeta_avg.push(((lat.dof)(node, mu), 1.0));
                    dzeta_avg.push(((lat.dof)(node, m), -1.0));
                }
                q.add(0.5 * b, &dxi_avg, &dzeta_avg);
            }
            for n in 0..nn {
                let (_, _, c) = energy_coefs(grid, lat.xi[n], zeta_mid);
                let d = [((lat.dof)(n, mu), 1.0), ((lat.dof)(n, m), -1.0)];
                q.add(c * dx / dz, &d, &d);
                if lat.mass_term {
                    let k = (lat.dof)(n, m);
                    q.add(2.0 * PI * dx * dz / lat.xi[n], &[(k, 1.0)], &[(k, 1.0)]);
                }
            }
        }
    }
    let k: CsMat<f64> = q.t.to_csr();
    k.map(|v| v * grid.normalization())
}

/// `<grad u, grad v>` for fields with zero wall values.
pub fn dirichlet_form(grid: &MappedGrid, u: &VectorField, v: &VectorField) -> Result<f64> {
    u.check(grid)?;
    v.check(grid)?;
    let lay = Layout::of(grid);
    let k = stiffness_matrix(grid);
    let ku = spmv(&k, &lay.to_dofs(grid, u));
    Ok(crate::linalg::dot(&ku, &lay.to_dofs(grid, v)))
}

/// Componentwise vector Laplacian `Delta u` (wall values treated as zero).
pub fn laplacian_dirichlet(grid: &MappedGrid, u: &VectorField) -> Result<VectorField> {
    u.check(grid)?;
    let lay = Layout::of(grid);
    let k = stiffness_matrix(grid);
    let mass = lay.mass(grid);
    let mut y = spmv(&k, &lay.to_dofs(grid, u));
    for (v, m) in y.iter_mut().zip(&mass) {
        *v = -*v / m;
    }
    Ok(lay.from_dofs(grid, &y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::inner;
    use crate::geometry::{build_grid, PipeProfile};

    fn wavy(kind: GeometryKind) -> MappedGrid {
        let p = PipeProfile::sinusoidal(1.0, 0.2, 1.0).unwrap();
        build_grid(&p, kind, 16, 16).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = wavy(GeometryKind::Axisym);
        let l = laplacian_dirichlet(&g, &VectorField::zeros(&g)).unwrap();
        assert_eq!(l.max_abs(), 0.0);
    }

    #[test]
    fn symmetric_and_matches_energy() {
        for kind in [GeometryKind::Planar2D, GeometryKind::Axisym] {
            let g = wavy(kind);
            for seed in 0..10 {
                let u = VectorField::random(&g, seed);
                let v = VectorField::random(&g, seed + 100);
                let lu = laplacian_dirichlet(&g, &u).unwrap();
                let lv = laplacian_dirichlet(&g, &v).unwrap();
                let a = -inner(&g, &lu, &v).unwrap();
                let b = -inner(&g, &lv, &u).unwrap();
                let scale = crate::fields::norm(&g, &lu).unwrap() * crate::fields::norm(&g, &v).unwrap();
                assert!((a - b).abs() <= 1e-13 * scale, "{a} {b} {scale}");
                let e = dirichlet_form(&g, &u, &v).unwrap();
                assert!((a - e).abs() <= 1e-13 * a.abs().max(scale));
            }
        }
    }

    #[test]
    fn stiffness_is_positive_definite() {
        for kind in [GeometryKind::Planar2D, GeometryKind::Axisym] {
            let p = PipeProfile::sinusoidal(1.0, 0.5, 0.5).unwrap();
            let g = build_grid(&p, kind, 8, 8).unwrap();
            let k = stiffness_matrix(&g).to_dense();
            let n = k.nrows();
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| k[[i, j]]);
            let eig = m.symmetric_eigenvalues();
            assert!(eig.min() > 0.0);
        }
    }

    #[test]
    fn cosine_is_an_eigenfunction_in_the_interior() {
        let err = |n: usize| {
            let p = PipeProfile::straight(1.0, 1.0).unwrap();
            let g = build_grid(&p, GeometryKind::Planar2D, n, 8).unwrap();
            let h = PI / 2.0;
            let u = VectorField::from_fn(&g, |_, _| 0.0, |x, _| (h * x).cos(), |_, _| 0.0);
            let l = laplacian_dirichlet(&g, &u).unwrap();
            let mut e: f64 = 0.0;
            for j in 0..g.nzeta {
                for i in 1..g.nxi - 1 {
                    let c = g.c_idx(i, j);
                    e = e.max((-l.uz[c] - h * h * u.uz[c]).abs());
                }
            }
            e
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 < 0.02 && e1 / e2 > 3.5, "{e1} {e2}");
    }
}
