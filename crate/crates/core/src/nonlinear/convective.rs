//! `(u . grad) u` on the staggered mapped grid.
//!
//! With `x = xi r(z)`: `d/dx = (1/r) d/dxi` and `d/dz = d/dzeta - (xi r'/r) d/dxi`.
//! Each component is evaluated where it is stored, with centred differences
//! and second-order one-sided stencils at the walls.

use crate::error::{PerifluxError, Result};
use crate::fields::VectorField;
use crate::geometry::{GeometryKind, MappedGrid};

#[derive(Clone, Copy, PartialEq)]
enum Parity {
    Even,
    Odd,
}

/// `d/dxi` of a cell-centred column at cell `i`, `u = 0` on the walls. At the
/// axis the column is extended by the given parity.
fn dxi_center(grid: &MappedGrid, col: impl Fn(usize) -> f64, i: usize, axis: Parity) -> f64 {
    let h = grid.dxi;
    let n = grid.nxi;
    if n == 1 {
        return 0.0;
    }
    if i == 0 {
        if grid.kind == GeometryKind::Axisym {
            let ghost = if axis == Parity::Even { col(0) } else { -col(0) };
            return (col(1) - ghost) / (2.0 * h);
        }
        // Nodes: wall at -h/2 (value 0), 0, h.
        return col(1) / (3.0 * h) + col(0) / h;
    }
    if i == n - 1 {
        return -col(n - 2) / (3.0 * h) - col(n - 1) / h;
    }
    (col(i + 1) - col(i - 1)) / (2.0 * h)
}

/// `(u . grad) u`, with the cylindrical terms `-u_theta^2 / rho` (radial) and
/// `u_rho u_theta / rho` (swirl) in pipes.
pub fn convective_term(grid: &MappedGrid, u: &VectorField) -> Result<VectorField> {
    u.check(grid)?;
    if !u.no_slip {
        return Err(PerifluxError::IncompatibleField("convective term needs a non-slip field".into()));
    }
    let (nx, nz) = (grid.nxi, grid.nzeta);
    let (hx, hz) = (grid.dxi, grid.dzeta);
    let axisym = grid.kind == GeometryKind::Axisym;
    let ux = |a: usize, j: usize| u.ux[grid.x_idx(a, j)];
    let uz = |i: usize, j: usize| u.uz[grid.c_idx(i, j)];
    let ut = |i: usize, j: usize| u.utheta.as_ref().map_or(0.0, |t| t[grid.c_idx(i, j)]);
    let mut out = VectorField::zeros(grid);

    for j in 0..nz {
        let (jp, jm) = (grid.up(j), grid.down(j));
        // Transverse component at xi-faces, row centre.
        let (r, dr) = grid.profile.eval(grid.zeta_center(j));
        for a in 1..nx {
            let xi = grid.xi_face(a);
            let vx = ux(a, j);
            let vz = 0.25 * (uz(a - 1, j) + uz(a, j) + uz(a - 1, jp) + uz(a, jp));
            let dxi = (ux(a + 1, j) - ux(a - 1, j)) / (2.0 * hx);
            let dze = (ux(a, jp) - ux(a, jm)) / (2.0 * hz);
            let mut c = vx * dxi / r + vz * (dze - xi * dr / r * dxi);
            if axisym {
                let vt = 0.5 * (ut(a - 1, j) + ut(a, j));
                c -= vt * vt / (xi * r);
            }
            out.ux[grid.x_idx(a, j)] = c;
        }
        // Axial component at zeta-faces.
        let (r, dr) = grid.profile.eval(grid.zeta_face(j));
        for i in 0..nx {
            let xi = grid.xi_center(i);
            let vx = 0.25 * (ux(i, j) + ux(i + 1, j) + ux(i, jm) + ux(i + 1, jm));
            let vz = uz(i, j);
            let dxi = dxi_center(grid, |k| uz(k, j), i, Parity::Even);
            let dze = (uz(i, jp) - uz(i, jm)) / (2.0 * hz);
            out.uz[grid.c_idx(i, j)] = vx * dxi / r + vz * (dze - xi * dr / r * dxi);
        }
        // Swirl at cell centres.
        if axisym {
            let (r, dr) = grid.profile.eval(grid.zeta_center(j));
            let t = out.utheta.as_mut().expect("pipes carry swirl");
            for i in 0..nx {
                let xi = grid.xi_center(i);
                let vx = 0.5 * (ux(i, j) + ux(i + 1, j));
                let vz = 0.5 * (uz(i, j) + uz(i, jp));
                let vt = ut(i, j);
                let dxi = dxi_center(grid, |k| ut(k, j), i, Parity::Odd);
                let dze = (ut(i, jp) - ut(i, jm)) / (2.0 * hz);
                t[grid.c_idx(i, j)] = vx * dxi / r + vz * (dze - xi * dr / r * dxi) + vx * vt / (xi * r);
            }
        }
    }
    Ok(out)
}
