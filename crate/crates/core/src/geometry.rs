//! Periodic pipe cells and the transverse-scaling map onto a reference rectangle.
//!
//! A cell `{ |x| < r(z), 0 <= z < L }` (or its axisymmetric analogue
//! `{ rho < r(z) }`) is mapped to the rectangle `xi in [-1, 1]` (resp. `[0, 1]`),
//! `zeta in [0, L)` via `x = xi * r(zeta)`, `z = zeta`. Walls are the lines
//! `|xi| = 1`, so the axial period becomes a plain index wrap.
//!
//! Layout on the reference rectangle (MAC staggering):
//! - pressure and swirl at cell centres `(xi_i, zeta_j + dzeta/2)`,
//! - transverse velocity on xi-faces `(xi_{i-1/2}, zeta_j + dzeta/2)`, including the
//!   wall (and axis) faces,
//! - axial velocity on zeta-faces `(xi_i, zeta_j)`, face `j` being the lower face of row `j`.
//!
//! All quadrature weights carry one scalar factor `1 / raw_measure`, so the cell
//! has measure one.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{PerifluxError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Straight,
    Sinusoidal,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometryKind {
    /// Channel `(-r(z), r(z))` with velocity `(v_x, v_z)`.
    #[serde(rename = "PLANAR2D", alias = "planar2d")]
    Planar2D,
    /// Rotation pipe with theta-independent velocity `(v_rho, v_theta, v_z)`.
    #[serde(rename = "AXISYM", alias = "axisym")]
    Axisym,
}

impl GeometryKind {
    pub fn has_swirl(self) -> bool {
        matches!(self, GeometryKind::Axisym)
    }
}

/// Periodic wall radius (half-width for channels).
#[derive(Debug, Clone, PartialEq)]
pub struct PipeProfile {
    pub kind: ProfileKind,
    pub r0: f64,
    pub eps: f64,
    pub length: f64,
    pub samples: Option<Vec<(f64, f64)>>,
    // Trigonometric interpolant of tabulated data: mean, (cos, sin) pairs, Nyquist cosine.
    trig: Option<TrigSeries>,
}

#[derive(Debug, Clone, PartialEq)]
struct TrigSeries {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    nyquist: f64,
}

impl TrigSeries {
    fn fit(values: &[f64]) -> Self {
        let n = values.len();
        let half = n / 2;
        let mean = values.iter().sum::<f64>() / n as f64;
        let top = if n % 2 == 0 { half.saturating_sub(1) } else { half };
        let mut cos = Vec::with_capacity(top);
        let mut sin = Vec::with_capacity(top);
        for k in 1..=top {
            let (mut c, mut s) = (0.0, 0.0);
            for (i, v) in values.iter().enumerate() {
                let th = 2.0 * PI * (k * i) as f64 / n as f64;
                c += v * th.cos();
                s += v * th.sin();
            }
            cos.push(2.0 * c / n as f64);
            sin.push(2.0 * s / n as f64);
        }
        let nyquist = if n % 2 == 0 {
            values
                .iter()
                .enumerate()
                .map(|(i, v)| if i % 2 == 0 { *v } else { -*v })
                .sum::<f64>()
                / n as f64
        } else {
            0.0
        };
        TrigSeries {
            mean,
            cos,
            sin,
            nyquist,
        }
    }

    /// Value and derivative with respect to the phase `theta = 2 pi z / L`.
    fn eval(&self, theta: f64, n_samples: usize) -> (f64, f64) {
        let mut v = self.mean;
        let mut d = 0.0;
        for (k0, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (k0 + 1) as f64;
            let (sn, cs) = (k * theta).sin_cos();
            v += c * cs + s * sn;
            d += k * (-c * sn + s * cs);
        }
        if n_samples % 2 == 0 && self.nyquist != 0.0 {
            let k = (n_samples / 2) as f64;
            v += self.nyquist * (k * theta).cos();
            d -= self.nyquist * k * (k * theta).sin();
        }
        (v, d)
    }
}

const PERIODIC_ENDPOINT_TOL: f64 = 1e-10;

/// Builds a validated profile. Sinusoidal means `r(z) = r0 (1 + eps sin(2 pi z / L))`.
pub fn make_profile(
    kind: ProfileKind,
    r0: f64,
    eps: f64,
    length: f64,
    samples: Option<Vec<(f64, f64)>>,
) -> Result<PipeProfile> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(PerifluxError::invalid("L", "axial period must be positive"));
    }
    match kind {
        ProfileKind::Straight | ProfileKind::Sinusoidal => {
            if !(r0 > 0.0) || !r0.is_finite() {
                return Err(PerifluxError::invalid("r0", "reference radius must be positive"));
            }
            if kind == ProfileKind::Sinusoidal && !(0.0..=0.5).contains(&eps) {
                return Err(PerifluxError::invalid("eps", "wall amplitude must lie in [0, 0.5]"));
            }
            Ok(PipeProfile {
                kind,
                r0,
                eps: if kind == ProfileKind::Straight { 0.0 } else { eps },
                length,
                samples: None,
                trig: None,
            })
        }
        ProfileKind::Tabulated => {
            let samples = samples.ok_or_else(|| {
                PerifluxError::InvalidGeometry("tabulated profile needs samples".into())
            })?;
            let trig = fit_tabulated(&samples, length)?;
            let profile = PipeProfile {
                kind,
                r0: trig.mean,
                eps: 0.0,
                length,
                samples: Some(samples),
                trig: Some(trig),
            };
            // The interpolant must stay positive between the samples too.
            let probe = 64 * profile.samples.as_ref().map_or(1, |s| s.len());
            for i in 0..probe {
                let z = length * i as f64 / probe as f64;
                if !(profile.radius(z) > 0.0) {
                    return Err(PerifluxError::InvalidGeometry(format!(
                        "interpolated radius is not positive at z = {z}"
                    )));
                }
            }
            Ok(profile)
        }
    }
}

fn fit_tabulated(samples: &[(f64, f64)], length: f64) -> Result<TrigSeries> {
    if samples.len() < 3 {
        return Err(PerifluxError::InvalidGeometry(
            "tabulated profile needs at least three samples".into(),
        ));
    }
    if samples.iter().any(|(z, r)| !z.is_finite() || !r.is_finite()) {
        return Err(PerifluxError::InvalidGeometry("non-finite sample".into()));
    }
    if let Some((z, r)) = samples.iter().find(|(_, r)| *r <= 0.0) {
        return Err(PerifluxError::InvalidGeometry(format!(
            "radius {r} at z = {z} is not positive"
        )));
    }
    let n = samples.len() - 1;
    let (z_first, r_first) = samples[0];
    let (z_last, r_last) = samples[n];
    let scale = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    if (r_first - r_last).abs() > PERIODIC_ENDPOINT_TOL * scale {
        return Err(PerifluxError::InvalidGeometry(format!(
            "endpoints differ: r(0) = {r_first}, r(L) = {r_last}"
        )));
    }
    let h = length / n as f64;
    if (z_first).abs() > 1e-12 * length || (z_last - length).abs() > 1e-12 * length {
        return Err(PerifluxError::InvalidGeometry(
            "samples must span exactly [0, L]".into(),
        ));
    }
    for (i, (z, _)) in samples.iter().enumerate() {
        if (z - i as f64 * h).abs() > 1e-9 * length {
            return Err(PerifluxError::InvalidGeometry(
                "tabulated samples must be uniformly spaced".into(),
            ));
        }
    }
    let values: Vec<f64> = samples[..n].iter().map(|s| s.1).collect();
    Ok(TrigSeries::fit(&values))
}

impl PipeProfile {
    pub fn straight(r0: f64, length: f64) -> Result<Self> {
        make_profile(ProfileKind::Straight, r0, 0.0, length, None)
    }

    pub fn sinusoidal(r0: f64, eps: f64, length: f64) -> Result<Self> {
        make_profile(ProfileKind::Sinusoidal, r0, eps, length, None)
    }

    pub fn is_straight(&self) -> bool {
        match self.kind {
            ProfileKind::Straight => true,
            ProfileKind::Sinusoidal => self.eps == 0.0,
            ProfileKind::Tabulated => self
                .trig
                .as_ref()
                .map_or(false, |t| t.cos.iter().chain(&t.sin).all(|c| c.abs() < 1e-14) && t.nyquist.abs() < 1e-14),
        }
    }

    /// Wall radius and its axial derivative at `z`.
    pub fn eval(&self, z: f64) -> (f64, f64) {
        let k = 2.0 * PI / self.length;
        match self.kind {
            ProfileKind::Straight => (self.r0, 0.0),
            ProfileKind::Sinusoidal => {
                let (s, c) = (k * z).sin_cos();
                (self.r0 * (1.0 + self.eps * s), self.r0 * self.eps * k * c)
            }
            ProfileKind::Tabulated => {
                let trig = self.trig.as_ref().expect("tabulated profile carries its series");
                let n = self.samples.as_ref().map_or(0, |s| s.len() - 1);
                let (v, d) = trig.eval(k * z, n);
                (v, d * k)
            }
        }
    }

    pub fn radius(&self, z: f64) -> f64 {
        self.eval(z).0
    }
}

/// Reference grid with metric data and normalized quadrature weights.
#[derive(Debug, Clone)]
pub struct MappedGrid {
    pub kind: GeometryKind,
    pub profile: PipeProfile,
    pub nxi: usize,
    pub nzeta: usize,
    pub dxi: f64,
    pub dzeta: f64,
    pub xi_min: f64,
    /// Radius at row centres and at zeta-faces.
    pub r_center: Vec<f64>,
    pub r_face: Vec<f64>,
    /// Discrete `r'` and `r r'` at row centres, built from face radii so that a
    /// constant vector field has exactly zero discrete divergence.
    pub dr_center: Vec<f64>,
    pub rdr_center: Vec<f64>,
    raw_measure: f64,
    norm: f64,
    /// Normalized weights: cell centres, xi-faces ((nxi+1) x nzeta), zeta-faces (nxi x nzeta).
    pub w_center: Vec<f64>,
    pub w_xface: Vec<f64>,
    pub w_zface: Vec<f64>,
}

impl MappedGrid {
    pub fn xi_center(&self, i: usize) -> f64 {
        self.xi_min + (i as f64 + 0.5) * self.dxi
    }

    /// Position of xi-face `a` (a = 0 is the left wall or the axis).
    pub fn xi_face(&self, a: usize) -> f64 {
        self.xi_min + a as f64 * self.dxi
    }

    pub fn zeta_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dzeta
    }

    pub fn zeta_face(&self, j: usize) -> f64 {
        j as f64 * self.dzeta
    }

    pub fn length(&self) -> f64 {
        self.profile.length
    }

    pub fn n_center(&self) -> usize {
        self.nxi * self.nzeta
    }

    pub fn n_xface(&self) -> usize {
        (self.nxi + 1) * self.nzeta
    }

    #[inline]
    pub fn c_idx(&self, i: usize, j: usize) -> usize {
        j * self.nxi + i
    }

    #[inline]
    pub fn x_idx(&self, a: usize, j: usize) -> usize {
        j * (self.nxi + 1) + a
    }

    #[inline]
    pub fn up(&self, j: usize) -> usize {
        if j + 1 == self.nzeta {
            0
        } else {
            j + 1
        }
    }

    #[inline]
    pub fn down(&self, j: usize) -> usize {
        if j == 0 {
            self.nzeta - 1
        } else {
            j - 1
        }
    }

    /// Volume density of the map (before normalization) at `(xi, zeta)` for radius `r`.
    pub fn jacobian(&self, xi: f64, r: f64) -> f64 {
        match self.kind {
            GeometryKind::Planar2D => r,
            GeometryKind::Axisym => 2.0 * PI * xi * r * r,
        }
    }

    /// Measure of one cell before normalization.
    pub fn raw_measure(&self) -> f64 {
        self.raw_measure
    }

    /// Factor folded into every quadrature weight (`1 / raw_measure`).
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// `L / |cell|`: the factor relating cell integrals of `v_z` to the section flux.
    pub fn flux_scale(&self) -> f64 {
        self.length() * self.norm
    }

    /// Whether xi-face `a` lies on the wall or on the axis.
    pub fn is_boundary_xface(&self, a: usize) -> bool {
        a == 0 || a == self.nxi
    }

    /// Physical coordinates `(x, z)` (or `(rho, z)`) of a reference point.
    pub fn physical(&self, xi: f64, zeta: f64) -> (f64, f64) {
        (xi * self.profile.radius(zeta), zeta)
    }

    /// Cross-section measure at `z` (width for channels, disc area for pipes).
    pub fn section_measure(&self, z: f64) -> f64 {
        let r = self.profile.radius(z);
        match self.kind {
            GeometryKind::Planar2D => 2.0 * r,
            GeometryKind::Axisym => PI * r * r,
        }
    }

    pub fn min_jacobian(&self) -> f64 {
        let mut m = f64::INFINITY;
        for j in 0..self.nzeta {
            for i in 0..self.nxi {
                m = m.min(self.jacobian(self.xi_center(i), self.r_center[j]));
            }
        }
        m
    }
}

pub fn build_grid(
    profile: &PipeProfile,
    kind: GeometryKind,
    nxi: usize,
    nzeta: usize,
) -> Result<MappedGrid> {
    for (name, n) in [("Nxi", nxi), ("Nzeta", nzeta)] {
        if n < 8 || n % 2 != 0 {
            return Err(PerifluxError::invalid(name, format!("must be even and >= 8 (got {n})")));
        }
    }
    let (xi_min, xi_max) = match kind {
        GeometryKind::Planar2D => (-1.0, 1.0),
        GeometryKind::Axisym => (0.0, 1.0),
    };
    let dxi = (xi_max - xi_min) / nxi as f64;
    let dzeta = profile.length / nzeta as f64;
    let r_center: Vec<f64> = (0..nzeta)
        .map(|j| profile.radius((j as f64 + 0.5) * dzeta))
        .collect();
    let r_face: Vec<f64> = (0..nzeta).map(|j| profile.radius(j as f64 * dzeta)).collect();
    if r_center.iter().chain(&r_face).any(|r| !(*r > 0.0)) {
        return Err(PerifluxError::InvalidGeometry("non-positive radius on grid".into()));
    }
    let mut dr_center = vec![0.0; nzeta];
    let mut rdr_center = vec![0.0; nzeta];
    for j in 0..nzeta {
        let up = if j + 1 == nzeta { 0 } else { j + 1 };
        let (lo, hi) = (r_face[j], r_face[up]);
        dr_center[j] = (hi - lo) / dzeta;
        rdr_center[j] = (hi * hi - lo * lo) / (2.0 * dzeta);
    }

    let mut grid = MappedGrid {
        kind,
        profile: profile.clone(),
        nxi,
        nzeta,
        dxi,
        dzeta,
        xi_min,
        r_center,
        r_face,
        dr_center,
        rdr_center,
        raw_measure: 1.0,
        norm: 1.0,
        w_center: Vec::new(),
        w_xface: Vec::new(),
        w_zface: Vec::new(),
    };

    let cell = dxi * dzeta;
    let mut w_center = vec![0.0; nxi * nzeta];
    let mut w_zface = vec![0.0; nxi * nzeta];
    let mut w_xface = vec![0.0; (nxi + 1) * nzeta];
    for j in 0..nzeta {
        for i in 0..nxi {
            let xi = grid.xi_center(i);
            w_center[grid.c_idx(i, j)] = grid.jacobian(xi, grid.r_center[j]) * cell;
            w_zface[grid.c_idx(i, j)] = grid.jacobian(xi, grid.r_face[j]) * cell;
        }
        for a in 1..nxi {
            w_xface[grid.x_idx(a, j)] = grid.jacobian(grid.xi_face(a), grid.r_center[j]) * cell;
        }
    }
    let raw: f64 = w_center.iter().sum();
    let norm = 1.0 / raw;
    for w in w_center.iter_mut().chain(w_zface.iter_mut()).chain(w_xface.iter_mut()) {
        *w *= norm;
    }
    grid.raw_measure = raw;
    grid.norm = norm;
    grid.w_center = w_center;
    grid.w_xface = w_xface;
    grid.w_zface = w_zface;

    if !(grid.min_jacobian() > 0.0) {
        return Err(PerifluxError::InvalidGeometry("non-positive Jacobian".into()));
    }
    Ok(grid)
}

/// Normalized measure of the cell (one, up to rounding).
pub fn cell_measure(grid: &MappedGrid) -> f64 {
    grid.w_center.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_profile_is_constant() {
        let p = PipeProfile::straight(1.0, 1.0).unwrap();
        for i in 0..10 {
            assert_eq!(p.eval(i as f64 * 0.1), (1.0, 0.0));
        }
    }

    #[test]
    fn sinusoidal_quarter_period() {
        let p = PipeProfile::sinusoidal(1.0, 0.2, 1.0).unwrap();
        assert!((p.radius(0.25) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn tabulated_rejects_nonperiodic_endpoints() {
        let samples = vec![(0.0, 1.0), (0.25, 1.1), (0.5, 1.0), (0.75, 0.9), (1.0, 1.01)];
        let err = make_profile(ProfileKind::Tabulated, 0.0, 0.0, 1.0, Some(samples)).unwrap_err();
        assert!(matches!(err, PerifluxError::InvalidGeometry(_)));
    }

    #[test]
    fn tabulated_rejects_nonpositive_radius() {
        let samples = vec![(0.0, 1.0), (0.5, -0.1), (1.0, 1.0)];
        let err = make_profile(ProfileKind::Tabulated, 0.0, 0.0, 1.0, Some(samples)).unwrap_err();
        assert!(matches!(err, PerifluxError::InvalidGeometry(_)));
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(
            PipeProfile::straight(0.0, 1.0),
            Err(PerifluxError::InvalidParameter { .. })
        ));
        assert!(matches!(
            PipeProfile::straight(1.0, -1.0),
            Err(PerifluxError::InvalidParameter { .. })
        ));
        assert!(PipeProfile::sinusoidal(1.0, 0.6, 1.0).is_err());
        let p = PipeProfile::straight(1.0, 1.0).unwrap();
        assert!(build_grid(&p, GeometryKind::Planar2D, 6, 16).is_err());
        assert!(build_grid(&p, GeometryKind::Planar2D, 16, 15).is_err());
    }

    #[test]
    fn tabulated_reproduces_sinusoid() {
        let sin = PipeProfile::sinusoidal(1.0, 0.3, 2.0).unwrap();
        let n = 16;
        let samples: Vec<(f64, f64)> = (0..=n)
            .map(|i| {
                let z = 2.0 * i as f64 / n as f64;
                (z, sin.radius(z))
            })
            .collect();
        let tab = make_profile(ProfileKind::Tabulated, 0.0, 0.0, 2.0, Some(samples)).unwrap();
        for i in 0..200 {
            let z = 2.0 * i as f64 / 200.0;
            let (a, da) = sin.eval(z);
            let (b, db) = tab.eval(z);
            assert!((a - b).abs() < 1e-12);
            assert!((da - db).abs() < 1e-11);
        }
    }

    #[test]
    fn normalized_measure_is_one() {
        for kind in [GeometryKind::Planar2D, GeometryKind::Axisym] {
            let p = PipeProfile::sinusoidal(0.7, 0.2, 1.3).unwrap();
            let g = build_grid(&p, kind, 16, 16).unwrap();
            assert!((cell_measure(&g) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn raw_measures() {
        let p = PipeProfile::straight(1.0, 1.0).unwrap();
        let g = build_grid(&p, GeometryKind::Planar2D, 16, 16).unwrap();
        assert!((g.raw_measure() - 2.0).abs() < 1e-14);
        let g = build_grid(&p, GeometryKind::Axisym, 16, 16).unwrap();
        assert!((g.raw_measure() - PI).abs() < 1e-12);
        assert!(g.dr_center.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn jacobian_positive_on_wavy_axisym() {
        let p = PipeProfile::sinusoidal(1.0, 0.2, 1.0).unwrap();
        let g = build_grid(&p, GeometryKind::Axisym, 32, 32).unwrap();
        assert!(g.min_jacobian() > 0.0);
    }

    #[test]
    fn raw_measure_converges_at_second_order() {
        // Closed form for the wavy channel: 2 r0 L (mean of 1 + eps sin) = 2 r0 L.
        // Use a profile whose midpoint rule is not exact: r = r0 (1 + eps sin)^.. via tabulated
        // samples of a non-trigonometric bump is overkill; the axisym disc area
        // pi r0^2 L (1 + eps^2 / 2) already tests the zeta quadrature.
        let p = PipeProfile::sinusoidal(1.0, 0.4, 1.0).unwrap();
        let exact = PI * (1.0 + 0.4f64.powi(2) / 2.0);
        let coarse = build_grid(&p, GeometryKind::Axisym, 8, 8).unwrap().raw_measure();
        let fine = build_grid(&p, GeometryKind::Axisym, 16, 16).unwrap().raw_measure();
        // Midpoint rule on a trigonometric polynomial is spectrally accurate.
        assert!((coarse - exact).abs() < 1e-12);
        assert!((fine - exact).abs() < 1e-12);
    }
}
