//! The discrete space of divergence-free, no-slip velocity fields.
//!
//! Meridional fields are parametrized by a stream function on cell corners:
//! the contravariant fluxes through every face are differences of corner
//! values, so the discrete divergence vanishes identically. The corner values
//! are zero on the left wall (or the axis) and equal to the section flux `Q` on
//! the right wall, which makes `Q` itself one of the unknowns. Swirl (when
//! present) is unconstrained and appended as an identity block.
//!
//! Reduced operators are Galerkin restrictions `C^T K C` and `C^T M C`; the
//! Stokes operator on the space is `M~^{-1} K~`.

use num_complex::Complex64;
use sprs::{CsMat, TriMat};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::laplacian::stiffness_matrix;
use super::ops::{xflux_coefs, zflux_coef, Layout};
use super::VectorField;
use crate::error::{PerifluxError, Result};
use crate::geometry::MappedGrid;
use crate::linalg::{complex_combination, dot, ordering::rcm_ordering, real_combination, spmv, symmetrize, Skyline};

type Sparse = Vec<(usize, f64)>;

pub struct DivFreeSpace {
    pub grid: MappedGrid,
    pub layout: Layout,
    n_psi: usize,
    n_red: usize,
    c: CsMat<f64>,
    ct: CsMat<f64>,
    k_full: CsMat<f64>,
    mass_full: Vec<f64>,
    k_red: CsMat<f64>,
    m_red: CsMat<f64>,
    perm: Vec<usize>,
    k_fact: Skyline<f64>,
    m_fact: Skyline<f64>,
    complex_cache: Mutex<HashMap<(u64, u64), Arc<Skyline<Complex64>>>>,
    real_cache: Mutex<HashMap<(u64, u64), Arc<Skyline<f64>>>>,
}

impl std::fmt::Debug for DivFreeSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DivFreeSpace")
            .field("nxi", &self.grid.nxi)
            .field("nzeta", &self.grid.nzeta)
            .field("dim", &self.n_red)
            .finish()
    }
}

impl DivFreeSpace {
    pub fn new(grid: &MappedGrid) -> Result<Self> {
        let layout = Layout::of(grid);
        let (nxi, nz) = (grid.nxi, grid.nzeta);
        let n_psi = (nxi - 1) * nz + 1;
        let n_red = n_psi + layout.n_ut();
        let q = n_psi - 1;
        let psi = |a: usize, j: usize| -> Option<usize> {
            if a == 0 {
                None
            } else if a == nxi {
                Some(q)
            } else {
                Some(j * (nxi - 1) + a - 1)
            }
        };
        let mut uz_rows: Vec<Sparse> = vec![Vec::new(); nxi * nz];
        for j in 0..nz {
            for i in 0..nxi {
                let s = 1.0 / (grid.dxi * zflux_coef(grid, i, j));
                let row = &mut uz_rows[j * nxi + i];
                if let Some(c) = psi(i + 1, j) {
                    row.push((c, s));
                }
                if let Some(c) = psi(i, j) {
                    row.push((c, -s));
                }
            }
        }
        let mut t = TriMat::new((layout.len(), n_red));
        for j in 0..nz {
            let up = grid.up(j);
            for a in 1..nxi {
                let (alpha, beta) = xflux_coefs(grid, a, j);
                let row = layout.ux(a, j);
                let s = -1.0 / (grid.dzeta * alpha);
                if let Some(c) = psi(a, up) {
                    t.add_triplet(row, c, s);
                }
                if let Some(c) = psi(a, j) {
                    t.add_triplet(row, c, -s);
                }
                for (i, jj) in [(a - 1, j), (a, j), (a - 1, up), (a, up)] {
                    for &(c, v) in &uz_rows[jj * nxi + i] {
                        t.add_triplet(row, c, 0.25 * beta / alpha * v);
                    }
                }
            }
            for i in 0..nxi {
                for &(c, v) in &uz_rows[j * nxi + i] {
                    t.add_triplet(layout.uz(i, j), c, v);
                }
            }
        }
        if layout.swirl {
            for j in 0..nz {
                for i in 0..nxi {
                    t.add_triplet(layout.ut(i, j), n_psi + j * nxi + i, 1.0);
                }
            }
        }
        let c: CsMat<f64> = t.to_csr();
        let ct: CsMat<f64> = c.transpose_view().to_csr();
        let k_full = stiffness_matrix(grid);
        let mass_full = layout.mass(grid);
        let kc = &k_full * &c;
        let k_red = symmetrize(&(&ct * &kc).to_csr());
        let mut mc = c.clone();
        for (i, mut row) in mc.outer_iterator_mut().enumerate() {
            for (_, v) in row.iter_mut() {
                *v *= mass_full[i];
            }
        }
        let m_red = symmetrize(&(&ct * &mc).to_csr());
        let perm = rcm_ordering(&k_red);
        let k_fact = Skyline::factor_with_perm(&k_red, perm.clone(), "reduced stiffness")?;
        let m_fact = Skyline::factor_with_perm(&m_red, perm.clone(), "reduced mass")?;
        Ok(DivFreeSpace {
            grid: grid.clone(),
            layout,
            n_psi,
            n_red,
            c,
            ct,
            k_full,
            mass_full,
            k_red,
            m_red,
            perm,
            k_fact,
            m_fact,
            complex_cache: Mutex::new(HashMap::new()),
            real_cache: Mutex::new(HashMap::new()),
        })
    }

    /// Dimension of the divergence-free space.
    pub fn dim(&self) -> usize {
        self.n_red
    }

    /// Index of the section-flux unknown.
    pub fn flux_index(&self) -> usize {
        self.n_psi - 1
    }

    /// Range of the swirl unknowns (empty for channels).
    pub fn swirl_range(&self) -> std::ops::Range<usize> {
        self.n_psi..self.n_red
    }

    /// `L / |cell|`: `(v, e_z) = kappa * Q(v)` for every `v` in the space.
    pub fn kappa(&self) -> f64 {
        self.grid.flux_scale()
    }

    pub fn stiffness(&self) -> &CsMat<f64> {
        &self.k_red
    }

    pub fn mass(&self) -> &CsMat<f64> {
        &self.m_red
    }

    pub fn full_stiffness(&self) -> &CsMat<f64> {
        &self.k_full
    }

    pub fn full_mass(&self) -> &[f64] {
        &self.mass_full
    }

    /// Velocity unknowns of the field with reduced coordinates `x`.
    pub fn lift(&self, x: &[f64]) -> Vec<f64> {
        spmv(&self.c, x)
    }

    pub fn lift_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        crate::linalg::spmv_c(&self.c, x)
    }

    pub fn field(&self, x: &[f64]) -> VectorField {
        self.layout.from_dofs(&self.grid, &self.lift(x))
    }

    /// Galerkin load `C^T M f` of a field given by its velocity unknowns.
    pub fn load(&self, f: &[f64]) -> Vec<f64> {
        let mf: Vec<f64> = f.iter().zip(&self.mass_full).map(|(a, b)| a * b).collect();
        spmv(&self.ct, &mf)
    }

    pub fn load_field(&self, f: &VectorField) -> Result<Vec<f64>> {
        f.check(&self.grid)?;
        Ok(self.load(&self.layout.to_dofs(&self.grid, f)))
    }

    /// Reduced coordinates of the orthogonal (Leray) projection of `f`.
    pub fn project(&self, f: &VectorField) -> Result<Vec<f64>> {
        Ok(self.solve_mass(&self.load_field(f)?))
    }

    pub fn apply_stiffness(&self, x: &[f64]) -> Vec<f64> {
        spmv(&self.k_red, x)
    }

    pub fn apply_mass(&self, x: &[f64]) -> Vec<f64> {
        spmv(&self.m_red, x)
    }

    pub fn solve_stiffness(&self, b: &[f64]) -> Vec<f64> {
        self.k_fact.solve(b)
    }

    pub fn solve_mass(&self, b: &[f64]) -> Vec<f64> {
        self.m_fact.solve(b)
    }

    /// `(x, y)` in the weighted L2 product.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.apply_mass(x), y)
    }

    /// `((x, y)) = (grad x, grad y)`.
    pub fn energy(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.apply_stiffness(x), y)
    }

    /// Stokes operator image `A x` in reduced coordinates.
    pub fn stokes_image(&self, x: &[f64]) -> Vec<f64> {
        self.solve_mass(&self.apply_stiffness(x))
    }

    /// Section flux `Q` of a field in the space.
    pub fn flux(&self, x: &[f64]) -> f64 {
        x[self.flux_index()]
    }

    /// Unit vector on the flux unknown, the load of `e_z` divided by `kappa`.
    pub fn flux_load(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.n_red];
        e[self.flux_index()] = 1.0;
        e
    }

    /// Factorization of `nu K~ + i omega M~`, cached per `(nu, omega)`.
    pub fn resolvent(&self, nu: f64, omega: f64) -> Result<Arc<Skyline<Complex64>>> {
        let key = (nu.to_bits(), omega.to_bits());
        if let Some(f) = self.complex_cache.lock().expect("cache lock").get(&key) {
            return Ok(f.clone());
        }
        let a = complex_combination(
            &self.k_red,
            Complex64::new(nu, 0.0),
            &self.m_red,
            Complex64::new(0.0, omega),
        );
        let f = Arc::new(Skyline::factor_with_perm(&a, self.perm.clone(), "harmonic resolvent")?);
        self.complex_cache
            .lock()
            .expect("cache lock")
            .insert(key, f.clone());
        Ok(f)
    }

    /// Factorization of `alpha M~ + beta K~`, cached.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Result<Arc<Skyline<f64>>> {
        if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta > 0.0) {
            return Err(PerifluxError::invalid("shift", "coefficients must be nonnegative"));
        }
        let key = (alpha.to_bits(), beta.to_bits());
        if let Some(f) = self.real_cache.lock().expect("cache lock").get(&key) {
            return Ok(f.clone());
        }
        let a = real_combination(&self.m_red, alpha, &self.k_red, beta);
        let f = Arc::new(Skyline::factor_with_perm(&a, self.perm.clone(), "shifted operator")?);
        self.real_cache.lock().expect("cache lock").insert(key, f.clone());
        Ok(f)
    }

    /// Squared norm `||P e_z||^2 = kappa^2 (M~^{-1})_{QQ}` and the reduced
    /// coordinates of `P e_z`.
    pub fn projected_axial(&self) -> (f64, Vec<f64>) {
        let k = self.kappa();
        let mut x = self.solve_mass(&self.flux_load());
        x.iter_mut().for_each(|v| *v *= k);
        let n2 = k * x[self.flux_index()];
        (n2, x)
    }
}
