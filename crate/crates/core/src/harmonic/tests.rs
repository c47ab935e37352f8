use super::*;
use crate::geometry::{build_grid, GeometryKind, PipeProfile};

fn setup(kind: GeometryKind, eps: f64, n: usize) -> (DivFreeSpace, SpectralBasis) {
    let p = if eps == 0.0 {
        PipeProfile::straight(1.0, 1.0).unwrap()
    } else {
        PipeProfile::sinusoidal(1.0, eps, 1.0).unwrap()
    };
    let g = build_grid(&p, kind, n, n).unwrap();
    let s = DivFreeSpace::new(&g).unwrap();
    let b = SpectralBasis::constants_only(&s, 1e-10).unwrap();
    (s, b)
}

fn signal() -> FluxSignal {
    FluxSignal::new(1.0, 0.4, vec![1.0, -0.3, 0.0], vec![0.5, 0.2, 0.1]).unwrap()
}

#[test]
fn zero_flux_gives_zero_solution() {
    let (s, b) = setup(GeometryKind::Axisym, 0.2, 8);
    let z = FluxSignal::new(1.0, 0.0, vec![0.0; 3], vec![0.0; 3]).unwrap();
    let sol = solve_periodic_stokes(&s, &b, &z, 0.5, Method::Resolvent).unwrap();
    assert!(sol.is_zero());
    assert_eq!(sol.psi(0.3), 0.0);
    let r = verify_estimates(&s, &sol, &z, 8);
    assert_eq!(r.r1, 0.0);
    assert_eq!(r.r3_sup, 0.0);
}

fn poiseuille_error(n: usize, g0: f64, nu: f64) -> (f64, f64, f64) {
    let (s, b) = setup(GeometryKind::Planar2D, 0.0, n);
    let f = FluxSignal::constant(1.0, g0).unwrap();
    let sol = solve_periodic_stokes(&s, &b, &f, nu, Method::Resolvent).unwrap();
    let v = sol.evaluate(&s, 0.0);
    let grid = &s.grid;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..grid.nzeta {
        for i in 0..grid.nxi {
            let x = grid.xi_center(i);
            let ex = 0.75 * g0 * (1.0 - x * x);
            num += (v.uz[grid.c_idx(i, j)] - ex).powi(2);
            den += ex * ex;
        }
    }
    let rec = recover_psi(&s, &b, &sol, &f);
    assert!((rec.psi0 - sol.psi0).abs() < 1e-8 * sol.psi0, "{} {}", rec.psi0, sol.psi0);
    ((num / den).sqrt(), sol.psi0, axial_variation(grid, &v).unwrap())
}

#[test]
fn steady_channel_is_poiseuille() {
    let (g0, nu) = (0.8, 0.3);
    let exact = 1.5 * nu * g0;
    let (e16, p16, _) = poiseuille_error(16, g0, nu);
    let (e32, p32, var) = poiseuille_error(32, g0, nu);
    assert!(e16 / e32 > 3.5 && e32 < 1e-3, "{e16} {e32}");
    let (d16, d32) = ((p16 - exact).abs(), (p32 - exact).abs());
    assert!(d16 / d32 > 3.5 && d32 < 3e-3 * exact, "{p16} {p32}");
    assert!(var < 1e-9, "{var}");
}

fn womersley(x: f64, nu: f64, omega: f64, g: Complex64) -> Complex64 {
    let iw = Complex64::new(0.0, omega);
    let lam = (iw / nu).sqrt();
    let shape = |x: f64| Complex64::new(1.0, 0.0) - (lam * x).cosh() / lam.cosh();
    let total = Complex64::new(2.0, 0.0) - 2.0 * lam.tanh() / lam;
    g * shape(x) / total
}

fn womersley_error(n: usize, nu: f64) -> f64 {
    let (s, b) = setup(GeometryKind::Planar2D, 0.0, n);
    let f = FluxSignal::new(1.0, 0.0, vec![1.0], vec![0.5]).unwrap();
    let sol = solve_periodic_stokes(&s, &b, &f, nu, Method::Resolvent).unwrap();
    let grid = &s.grid;
    assert!(axial_variation(grid, &sol.evaluate(&s, 0.2)).unwrap() < 1e-9);
    let (mut num, mut den) = (0.0, 0.0);
    for t in [0.0, 0.3, 0.7] {
        let v = sol.evaluate(&s, t);
        for i in 0..grid.nxi {
            let x = grid.xi_center(i);
            let ex = (womersley(x, nu, f.omega(1), f.complex(1)) * Complex64::from_polar(1.0, f.phase(1, t))).re;
            num += (v.uz[grid.c_idx(i, 0)] - ex).powi(2);
            den += ex * ex;
        }
    }
    (num / den).sqrt()
}

#[test]
fn oscillating_channel_matches_womersley() {
    for nu in [0.1, 1.0] {
        let (a, b) = (womersley_error(16, nu), womersley_error(32, nu));
        assert!(a / b > 3.5 && b < 1e-2, "nu {nu}: {a} {b}");
    }
}

#[test]
fn flux_is_enforced_on_wavy_pipe() {
    for kind in [GeometryKind::Planar2D, GeometryKind::Axisym] {
        let (s, b) = setup(kind, 0.2, 16);
        let f = signal();
        let sol = solve_periodic_stokes(&s, &b, &f, 0.7, Method::Resolvent).unwrap();
        let e = sol.max_flux_error(&s, &f, 16).unwrap();
        assert!(e < 1e-10, "{kind:?} {e}");
        let rec = recover_psi(&s, &b, &sol, &f);
        for t in [0.0, 0.13, 0.6] {
            assert!((rec.eval(t) - sol.psi(t)).abs() < 1e-8 * (1.0 + sol.psi(t).abs()));
        }
    }
}

#[test]
fn linear_in_the_flux() {
    let (s, b) = setup(GeometryKind::Axisym, 0.2, 12);
    let f1 = signal();
    let f2 = FluxSignal::new(1.0, -0.2, vec![0.0, 0.7, 0.3], vec![1.0, 0.0, -0.4]).unwrap();
    let sum = FluxSignal::new(
        1.0,
        f1.p0 + 2.0 * f2.p0,
        f1.p.iter().zip(&f2.p).map(|(a, b)| a + 2.0 * b).collect(),
        f1.q.iter().zip(&f2.q).map(|(a, b)| a + 2.0 * b).collect(),
    )
    .unwrap();
    let nu = 0.4;
    let s1 = solve_periodic_stokes(&s, &b, &f1, nu, Method::Resolvent).unwrap();
    let s2 = solve_periodic_stokes(&s, &b, &f2, nu, Method::Resolvent).unwrap();
    let s3 = solve_periodic_stokes(&s, &b, &sum, nu, Method::Resolvent).unwrap();
    let t = 0.37;
    let (x1, x2, x3) = (s1.reduced(t), s2.reduced(t), s3.reduced(t));
    let scale = s3.max_coefficient();
    for i in 0..x3.len() {
        assert!((x1[i] + 2.0 * x2[i] - x3[i]).abs() < 1e-10 * scale);
    }
    assert!((s1.psi(t) + 2.0 * s2.psi(t) - s3.psi(t)).abs() < 1e-10 * (1.0 + s3.psi(t).abs()));
}

#[test]
fn evaluation_is_periodic() {
    let (s, b) = setup(GeometryKind::Planar2D, 0.1, 8);
    let f = signal();
    let sol = solve_periodic_stokes(&s, &b, &f, 1.0, Method::Resolvent).unwrap();
    let a = sol.evaluate(&s, 0.25);
    let c = sol.evaluate(&s, 1.25);
    assert_eq!(a.uz, c.uz);
    assert_eq!(a.ux, c.ux);
}

#[test]
fn momentum_balance_holds_with_reconstructed_pressure() {
    let (s, b) = setup(GeometryKind::Axisym, 0.2, 12);
    let f = signal();
    let sol = solve_periodic_stokes(&s, &b, &f, 0.5, Method::Resolvent).unwrap();
    for k in 0..=2 {
        let r = momentum_residual(&s, &sol, k).unwrap();
        assert!(r < 1e-8, "k {k}: {r}");
    }
}

#[test]
fn galerkin_method_reports_modes() {
    let (s, _) = setup(GeometryKind::Planar2D, 0.2, 12);
    let b = SpectralBasis::compute(&s, 16, 1e-8).unwrap();
    let f = signal();
    let g = solve_periodic_stokes(&s, &b, &f, 1.0, Method::Galerkin).unwrap();
    let r = solve_periodic_stokes(&s, &b, &f, 1.0, Method::Resolvent).unwrap();
    assert!(g.harmonics.iter().all(|h| h.mode.is_some() || (h.p == 0.0 && h.q == 0.0)));
    let (dg, dr) = (g.reduced(0.2), r.reduced(0.2));
    let diff: Vec<f64> = dg.iter().zip(&dr).map(|(a, b)| a - b).collect();
    let rel = s.energy(&diff, &diff).sqrt() / s.energy(&dr, &dr).sqrt();
    assert!(rel < 0.5, "{rel}");
    let co = r.eigen_coefficients(&s, &b);
    assert_eq!(co.len(), 3);
    assert_eq!(co[0].0.len(), 16);
}

#[test]
fn estimate_ratios_are_finite() {
    let (s, b) = setup(GeometryKind::Axisym, 0.2, 12);
    let f = signal();
    for nu in [0.1, 1.0, 10.0] {
        let sol = solve_periodic_stokes(&s, &b, &f, nu, Method::Resolvent).unwrap();
        let r = verify_estimates(&s, &sol, &f, 32);
        for v in [r.r1, r.r1_stokes, r.r2, r.r3, r.r3_sup] {
            assert!(v.is_finite() && v > 0.0, "{r:?}");
        }
        assert!(r.r1_stokes <= r.r1 * (1.0 + 1e-12));
    }
}
