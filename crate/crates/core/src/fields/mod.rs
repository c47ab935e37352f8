//! Grid functions on the mapped cell and the discrete vector-calculus operators.
//!
//! Velocity components are the physical Cartesian (or cylindrical) components,
//! stored at staggered locations; derivatives pick up the metric of the map.

mod laplacian;
mod ops;
mod projection;
mod space;
mod stokes;

pub use laplacian::{dirichlet_form, laplacian_dirichlet, stiffness_matrix};
pub use ops::{divergence, divergence_operator, flux_profile, gradient, FluxProfile};
pub use projection::{leray_project, ProjectionResult};
pub use ops::Layout;
pub use space::DivFreeSpace;
pub use stokes::{apply_stokes, stokes_solve, stokes_solve_uzawa, UzawaReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PerifluxError, Result};
use crate::geometry::{GeometryKind, MappedGrid};

/// Identifies the grid a field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub kind: GeometryKind,
    pub nxi: usize,
    pub nzeta: usize,
}

impl Shape {
    pub fn of(grid: &MappedGrid) -> Self {
        Shape {
            kind: grid.kind,
            nxi: grid.nxi,
            nzeta: grid.nzeta,
        }
    }

    pub fn check(&self, grid: &MappedGrid) -> Result<()> {
        if *self == Shape::of(grid) {
            Ok(())
        } else {
            Err(PerifluxError::IncompatibleField(format!(
                "field is {:?} {}x{}, grid is {:?} {}x{}",
                self.kind, self.nxi, self.nzeta, grid.kind, grid.nxi, grid.nzeta
            )))
        }
    }
}

/// Values at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub shape: Shape,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &MappedGrid) -> Self {
        ScalarField {
            shape: Shape::of(grid),
            values: vec![0.0; grid.n_center()],
        }
    }

    /// Samples `f(xi, zeta)` at cell centres.
    pub fn from_fn(grid: &MappedGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.n_center()];
        for j in 0..grid.nzeta {
            for i in 0..grid.nxi {
                values[grid.c_idx(i, j)] = f(grid.xi_center(i), grid.zeta_center(j));
            }
        }
        ScalarField {
            shape: Shape::of(grid),
            values,
        }
    }

    pub fn random(grid: &MappedGrid, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.n_center()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ScalarField {
            shape: Shape::of(grid),
            values,
        }
    }
}

/// Staggered velocity field.
///
/// `ux` lives on all xi-faces including wall and axis faces (length
/// `(nxi+1) * nzeta`); `uz` on zeta-faces (`nxi * nzeta`); `utheta` at cell
/// centres (axisymmetric grids only).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub shape: Shape,
    pub ux: Vec<f64>,
    pub uz: Vec<f64>,
    pub utheta: Option<Vec<f64>>,
    /// Set when the field vanishes on the wall.
    pub no_slip: bool,
}

impl VectorField {
    pub fn zeros(grid: &MappedGrid) -> Self {
        VectorField {
            shape: Shape::of(grid),
            ux: vec![0.0; grid.n_xface()],
            uz: vec![0.0; grid.n_center()],
            utheta: grid.kind.has_swirl().then(|| vec![0.0; grid.n_center()]),
            no_slip: true,
        }
    }

    /// Samples physical component functions `(f_x, f_z, f_theta)` of `(xi, zeta)`
    /// at each component's location. Wall values of the transverse component are
    /// sampled too; the result is flagged non-slip only when they all vanish.
    pub fn from_fn(
        grid: &MappedGrid,
        fx: impl Fn(f64, f64) -> f64,
        fz: impl Fn(f64, f64) -> f64,
        ftheta: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut v = VectorField::zeros(grid);
        for j in 0..grid.nzeta {
            for a in 0..=grid.nxi {
                v.ux[grid.x_idx(a, j)] = fx(grid.xi_face(a), grid.zeta_center(j));
            }
            for i in 0..grid.nxi {
                v.uz[grid.c_idx(i, j)] = fz(grid.xi_center(i), grid.zeta_face(j));
                if let Some(t) = v.utheta.as_mut() {
                    t[grid.c_idx(i, j)] = ftheta(grid.xi_center(i), grid.zeta_center(j));
                }
            }
        }
        if grid.kind == GeometryKind::Axisym {
            for j in 0..grid.nzeta {
                v.ux[grid.x_idx(0, j)] = 0.0;
            }
        }
        v.no_slip = (0..grid.nzeta)
            .all(|j| v.ux[grid.x_idx(0, j)] == 0.0 && v.ux[grid.x_idx(grid.nxi, j)] == 0.0);
        v
    }

    /// Deterministic random field with zero wall values.
    pub fn random(grid: &MappedGrid, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = VectorField::zeros(grid);
        for j in 0..grid.nzeta {
            for a in 1..grid.nxi {
                v.ux[grid.x_idx(a, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        v.uz.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        if let Some(t) = v.utheta.as_mut() {
            t.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        }
        v
    }

    pub fn check(&self, grid: &MappedGrid) -> Result<()> {
        self.shape.check(grid)?;
        let ok = self.ux.len() == grid.n_xface()
            && self.uz.len() == grid.n_center()
            && self.utheta.as_ref().map(Vec::len) == grid.kind.has_swirl().then(|| grid.n_center());
        if ok {
            Ok(())
        } else {
            Err(PerifluxError::IncompatibleField("component lengths do not match the grid".into()))
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.ux.iter_mut().for_each(|x| *x *= s);
        self.uz.iter_mut().for_each(|x| *x *= s);
        if let Some(t) = self.utheta.as_mut() {
            t.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &VectorField) {
        self.ux.iter_mut().zip(&other.ux).for_each(|(a, b)| *a += s * b);
        self.uz.iter_mut().zip(&other.uz).for_each(|(a, b)| *a += s * b);
        if let (Some(t), Some(o)) = (self.utheta.as_mut(), other.utheta.as_ref()) {
            t.iter_mut().zip(o).for_each(|(a, b)| *a += s * b);
        }
        self.no_slip &= other.no_slip;
    }

    pub fn max_abs(&self) -> f64 {
        self.ux
            .iter()
            .chain(&self.uz)
            .chain(self.utheta.iter().flatten())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Weighted L2 inner product of two velocity fields over one cell.
pub fn inner(grid: &MappedGrid, a: &VectorField, b: &VectorField) -> Result<f64> {
    a.check(grid)?;
    b.check(grid)?;
    let mut s = 0.0;
    for (w, (x, y)) in grid.w_xface.iter().zip(a.ux.iter().zip(&b.ux)) {
        s += w * x * y;
    }
    for (w, (x, y)) in grid.w_zface.iter().zip(a.uz.iter().zip(&b.uz)) {
        s += w * x * y;
    }
    if let (Some(x), Some(y)) = (&a.utheta, &b.utheta) {
        for (w, (p, q)) in grid.w_center.iter().zip(x.iter().zip(y)) {
            s += w * p * q;
        }
    }
    Ok(s)
}

pub fn norm(grid: &MappedGrid, a: &VectorField) -> Result<f64> {
    Ok(inner(grid, a, a)?.max(0.0).sqrt())
}

/// Weighted L2 inner product of two cell-centred scalars.
pub fn inner_scalar(grid: &MappedGrid, a: &ScalarField, b: &ScalarField) -> Result<f64> {
    a.shape.check(grid)?;
    b.shape.check(grid)?;
    Ok(grid
        .w_center
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(w, (x, y))| w * x * y)
        .sum())
}

/// The constant axial unit vector. Components are Cartesian, so the axial
/// component is one everywhere (walls included) and the others vanish.
pub fn unit_axial_field(grid: &MappedGrid) -> VectorField {
    let mut v = VectorField::zeros(grid);
    v.uz.iter_mut().for_each(|x| *x = 1.0);
    v.no_slip = false;
    v
}

/// Physical components interpolated to cell centres: `(v_x, v_z, v_theta)`.
pub fn components_at_centers(grid: &MappedGrid, v: &VectorField) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]; grid.n_center()];
    for j in 0..grid.nzeta {
        let up = grid.up(j);
        for i in 0..grid.nxi {
            let c = grid.c_idx(i, j);
            let vx = 0.5 * (v.ux[grid.x_idx(i, j)] + v.ux[grid.x_idx(i + 1, j)]);
            let vz = 0.5 * (v.uz[c] + v.uz[grid.c_idx(i, up)]);
            let vt = v.utheta.as_ref().map_or(0.0, |t| t[c]);
            out[c] = [vx, vz, vt];
        }
    }
    out
}
