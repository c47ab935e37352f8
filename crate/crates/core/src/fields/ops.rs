//! Divergence, gradient and section fluxes on the staggered mapped grid.

use sprs::{CsMat, TriMat};
use std::f64::consts::PI;

use super::{ScalarField, Shape, VectorField};
use crate::error::Result;
use crate::geometry::{GeometryKind, MappedGrid};

/// Ordering of velocity unknowns in flat vectors: interior transverse faces,
/// then axial faces, then swirl (axisymmetric only). Row-major in zeta.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub nxi: usize,
    pub nzeta: usize,
    pub swirl: bool,
}

impl Layout {
    pub fn of(grid: &MappedGrid) -> Self {
        Layout {
            nxi: grid.nxi,
            nzeta: grid.nzeta,
            swirl: grid.kind.has_swirl(),
        }
    }

    pub fn n_ux(&self) -> usize {
        (self.nxi - 1) * self.nzeta
    }

    pub fn n_uz(&self) -> usize {
        self.nxi * self.nzeta
    }

    pub fn n_ut(&self) -> usize {
        if self.swirl {
            self.nxi * self.nzeta
        } else {
            0
        }
    }

    pub fn len(&self) -> usize {
        self.n_ux() + self.n_uz() + self.n_ut()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Interior xi-face `a` in `1..nxi`.
    #[inline]
    pub fn ux(&self, a: usize, j: usize) -> usize {
        j * (self.nxi - 1) + a - 1
    }

    #[inline]
    pub fn uz(&self, i: usize, j: usize) -> usize {
        self.n_ux() + j * self.nxi + i
    }

    #[inline]
    pub fn ut(&self, i: usize, j: usize) -> usize {
        self.n_ux() + self.n_uz() + j * self.nxi + i
    }

    pub fn to_dofs(&self, grid: &MappedGrid, v: &VectorField) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for j in 0..self.nzeta {
            for a in 1..self.nxi {
                out[self.ux(a, j)] = v.ux[grid.x_idx(a, j)];
            }
        }
        out[self.n_ux()..self.n_ux() + self.n_uz()].copy_from_slice(&v.uz);
        if let Some(t) = &v.utheta {
            out[self.n_ux() + self.n_uz()..].copy_from_slice(t);
        }
        out
    }

    /// Field with zero wall values built from interior unknowns.
    pub fn from_dofs(&self, grid: &MappedGrid, x: &[f64]) -> VectorField {
        let mut v = VectorField::zeros(grid);
        for j in 0..self.nzeta {
            for a in 1..self.nxi {
                v.ux[grid.x_idx(a, j)] = x[self.ux(a, j)];
            }
        }
        v.uz.copy_from_slice(&x[self.n_ux()..self.n_ux() + self.n_uz()]);
        if let Some(t) = v.utheta.as_mut() {
            t.copy_from_slice(&x[self.n_ux() + self.n_uz()..]);
        }
        v
    }

    /// Normalized quadrature weight of every unknown (the diagonal mass matrix).
    pub fn mass(&self, grid: &MappedGrid) -> Vec<f64> {
        let mut m = vec![0.0; self.len()];
        for j in 0..self.nzeta {
            for a in 1..self.nxi {
                m[self.ux(a, j)] = grid.w_xface[grid.x_idx(a, j)];
            }
        }
        m[self.n_ux()..self.n_ux() + self.n_uz()].copy_from_slice(&grid.w_zface);
        if self.swirl {
            m[self.n_ux() + self.n_uz()..].copy_from_slice(&grid.w_center);
        }
        m
    }
}

/// Coefficients of the contravariant flux through xi-face `(a, j)`:
/// `F = alpha * u_x - beta * avg(u_z)`.
#[inline]
pub(crate) fn xflux_coefs(grid: &MappedGrid, a: usize, j: usize) -> (f64, f64) {
    let xi = grid.xi_face(a);
    match grid.kind {
        GeometryKind::Planar2D => (1.0, xi * grid.dr_center[j]),
        GeometryKind::Axisym => (
            2.0 * PI * xi * grid.r_center[j],
            2.0 * PI * xi * xi * grid.rdr_center[j],
        ),
    }
}

/// Coefficient of the flux through zeta-face `(i, j)`: `F = gamma * u_z`.
#[inline]
pub(crate) fn zflux_coef(grid: &MappedGrid, i: usize, j: usize) -> f64 {
    match grid.kind {
        GeometryKind::Planar2D => grid.r_face[j],
        GeometryKind::Axisym => 2.0 * PI * grid.xi_center(i) * grid.r_face[j] * grid.r_face[j],
    }
}

/// Net outflow of every cell (not divided by the cell volume) as a sparse map
/// on interior unknowns. Wall and axis faces carry no flux.
pub fn divergence_operator(grid: &MappedGrid) -> CsMat<f64> {
    let lay = Layout::of(grid);
    let (dx, dz) = (grid.dxi, grid.dzeta);
    let mut t = TriMat::new((grid.n_center(), lay.len()));
    for j in 0..grid.nzeta {
        let up = grid.up(j);
        for a in 1..grid.nxi {
            let (alpha, beta) = xflux_coefs(grid, a, j);
            // Face a is the right face of cell a-1 and the left face of cell a.
            for (cell, sign) in [(a - 1, 1.0), (a, -1.0)] {
                let row = grid.c_idx(cell, j);
                t.add_triplet(row, lay.ux(a, j), sign * dz * alpha);
                for (i, jj) in [(a - 1, j), (a, j), (a - 1, up), (a, up)] {
                    t.add_triplet(row, lay.uz(i, jj), -sign * dz * beta * 0.25);
                }
            }
        }
        for i in 0..grid.nxi {
            let gamma = zflux_coef(grid, i, j);
            // Face j is the lower face of row j and the upper face of row j-1.
            t.add_triplet(grid.c_idx(i, j), lay.uz(i, j), -dx * gamma);
            t.add_triplet(grid.c_idx(i, grid.down(j)), lay.uz(i, j), dx * gamma);
        }
    }
    t.to_csr()
}

fn raw_cell_volume(grid: &MappedGrid, c: usize) -> f64 {
    grid.w_center[c] / grid.normalization()
}

/// Cell-centred divergence. Fields not flagged non-slip contribute their wall
/// flux, evaluated from the stored wall values.
pub fn divergence(grid: &MappedGrid, u: &VectorField) -> Result<ScalarField> {
    u.check(grid)?;
    let lay = Layout::of(grid);
    let b = divergence_operator(grid);
    let x = lay.to_dofs(grid, u);
    let mut net = crate::linalg::spmv(&b, &x);
    if !u.no_slip {
        let dz = grid.dzeta;
        for j in 0..grid.nzeta {
            let up = grid.up(j);
            for (a, cell, sign) in [(0usize, 0usize, -1.0), (grid.nxi, grid.nxi - 1, 1.0)] {
                let (alpha, beta) = xflux_coefs(grid, a, j);
                let wall_uz = 0.5 * (u.uz[grid.c_idx(cell, j)] + u.uz[grid.c_idx(cell, up)]);
                let f = alpha * u.ux[grid.x_idx(a, j)] - beta * wall_uz;
                net[grid.c_idx(cell, j)] += sign * dz * f;
            }
        }
    }
    for (c, v) in net.iter_mut().enumerate() {
        *v /= raw_cell_volume(grid, c);
    }
    Ok(ScalarField {
        shape: Shape::of(grid),
        values: net,
    })
}

/// Face gradient, the negative weighted adjoint of the divergence on fields
/// with zero normal trace. Wall faces get zero.
pub fn gradient(grid: &MappedGrid, s: &ScalarField) -> Result<VectorField> {
    s.shape.check(grid)?;
    let lay = Layout::of(grid);
    let b = divergence_operator(grid);
    let bt = b.transpose_view().to_csr();
    let mut g = crate::linalg::spmv(&bt, &s.values);
    let mass = lay.mass(grid);
    let norm = grid.normalization();
    for (v, m) in g.iter_mut().zip(&mass) {
        *v = if *m > 0.0 { -*v * norm / m } else { 0.0 };
    }
    Ok(lay.from_dofs(grid, &g))
}

/// Section flux of the axial component at every zeta-face row.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxProfile {
    pub rows: Vec<f64>,
    pub mean: f64,
    pub max_deviation: f64,
}

pub fn flux_profile(grid: &MappedGrid, v: &VectorField) -> Result<FluxProfile> {
    v.check(grid)?;
    let rows: Vec<f64> = (0..grid.nzeta)
        .map(|j| {
            (0..grid.nxi)
                .map(|i| grid.dxi * zflux_coef(grid, i, j) * v.uz[grid.c_idx(i, j)])
                .sum()
        })
        .collect();
    let mean = rows.iter().sum::<f64>() / rows.len() as f64;
    let max_deviation = rows.iter().fold(0.0f64, |m, r| m.max((r - mean).abs()));
    Ok(FluxProfile {
        rows,
        mean,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{inner, inner_scalar, unit_axial_field};
    use crate::geometry::{build_grid, PipeProfile};

    fn wavy(kind: GeometryKind, n: usize) -> MappedGrid {
        let p = PipeProfile::sinusoidal(1.0, 0.2, 1.0).unwrap();
        build_grid(&p, kind, n, n).unwrap()
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = wavy(GeometryKind::Axisym, 16);
        let s = ScalarField::from_fn(&g, |_, _| 3.5);
        assert!(gradient(&g, &s).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn gradient_of_zeta_on_straight_channel() {
        let p = PipeProfile::straight(1.0, 1.0).unwrap();
        let g = build_grid(&p, GeometryKind::Planar2D, 16, 16).unwrap();
        let s = ScalarField::from_fn(&g, |_, z| z);
        let gr = gradient(&g, &s).unwrap();
        // The wrap face j = 0 sees the jump of the non-periodic function.
        for j in 1..g.nzeta {
            for i in 0..g.nxi {
                assert!((gr.uz[g.c_idx(i, j)] - 1.0).abs() < 1e-12);
            }
            for a in 0..=g.nxi {
                assert!(gr.ux[g.x_idx(a, j)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjointness_on_random_pairs() {
        for kind in [GeometryKind::Planar2D, GeometryKind::Axisym] {
            let g = wavy(kind, 16);
            let mut worst: f64 = 0.0;
            for seed in 0..100 {
                let u = VectorField::random(&g, 2 * seed);
                let s = ScalarField::random(&g, 2 * seed + 1);
                let d = divergence(&g, &u).unwrap();
                let gs = gradient(&g, &s).unwrap();
                let lhs = inner_scalar(&g, &d, &s).unwrap() + inner(&g, &u, &gs).unwrap();
                let scale = inner(&g, &u, &u).unwrap().sqrt() * inner_scalar(&g, &s, &s).unwrap().sqrt();
                worst = worst.max(lhs.abs() / scale);
            }
            assert!(worst < 1e-13, "{kind:?}: {worst}");
        }
    }

    #[test]
    fn constant_axial_field_is_solenoidal() {
        for kind in [GeometryKind::Planar2D, GeometryKind::Axisym] {
            let g = wavy(kind, 16);
            let d = divergence(&g, &unit_axial_field(&g)).unwrap();
            assert!(d.values.iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn gradient_converges_on_wavy_grid() {
        // s = sin(2 pi z): the physical gradient is (0, 2 pi cos(2 pi z)).
        let err = |n: usize| {
            let g = wavy(GeometryKind::Planar2D, n);
            let s = ScalarField::from_fn(&g, |_, z| (2.0 * PI * z).sin());
            let gr = gradient(&g, &s).unwrap();
            let mut e: f64 = 0.0;
            for j in 0..g.nzeta {
                for i in 0..g.nxi {
                    let exact = 2.0 * PI * (2.0 * PI * g.zeta_face(j)).cos();
                    e = e.max((gr.uz[g.c_idx(i, j)] - exact).abs());
                }
                for a in 1..g.nxi {
                    e = e.max(gr.ux[g.x_idx(a, j)].abs());
                }
            }
            e
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn straight_stream_function_field_is_exactly_solenoidal() {
        let p = PipeProfile::straight(1.0, 1.0).unwrap();
        let g = build_grid(&p, GeometryKind::Planar2D, 16, 16).unwrap();
        let (k, h) = (2.0 * PI, PI / 2.0);
        let u = VectorField::from_fn(
            &g,
            |x, z| -(h * x).cos().powi(2) * k * (k * z).cos(),
            |x, z| -2.0 * h * (h * x).cos() * (h * x).sin() * (k * z).sin(),
            |_, _| 0.0,
        );
        let d = divergence(&g, &u).unwrap();
        assert!(d.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn wavy_solenoidal_field_converges() {
        // psi = x^2 cos(2 pi z): u = (2 pi x^2 sin(2 pi z), 2 x cos(2 pi z)).
        let err = |n: usize| {
            let g = wavy(GeometryKind::Planar2D, n);
            let k = 2.0 * PI;
            let r = |z: f64| g.profile.radius(z);
            let u = VectorField::from_fn(
                &g,
                |xi, z| k * (xi * r(z)).powi(2) * (k * z).sin(),
                |xi, z| 2.0 * xi * r(z) * (k * z).cos(),
                |_, _| 0.0,
            );
            // Wall cells see a one-sided axial average; check the interior.
            let d = divergence(&g, &u).unwrap();
            let mut e: f64 = 0.0;
            for j in 0..g.nzeta {
                for i in 1..g.nxi - 1 {
                    e = e.max(d.values[g.c_idx(i, j)].abs());
                }
            }
            e
        };
        let (e1, e2) = (err(32), err(64));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn axial_unit_flux_is_section_measure() {
        let p = PipeProfile::straight(1.0, 1.0).unwrap();
        let g = build_grid(&p, GeometryKind::Planar2D, 16, 16).unwrap();
        let f = flux_profile(&g, &unit_axial_field(&g)).unwrap();
        assert!(f.rows.iter().all(|r| (r - 2.0).abs() < 1e-14));
        let g = build_grid(&p, GeometryKind::Axisym, 16, 16).unwrap();
        let f = flux_profile(&g, &unit_axial_field(&g)).unwrap();
        assert!(f.rows.iter().all(|r| (r - PI).abs() < 1e-13));
    }
}
