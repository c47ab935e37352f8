use super::*;
use crate::fields::{gradient, ScalarField};
use crate::geometry::{build_grid, GeometryKind, PipeProfile};

fn setup(kind: GeometryKind, n: usize, m: usize) -> (DivFreeSpace, SpectralBasis) {
    let p = PipeProfile::sinusoidal(1.0, 0.2, 1.0).unwrap();
    let g = build_grid(&p, kind, n, n).unwrap();
    let s = DivFreeSpace::new(&g).unwrap();
    let b = SpectralBasis::compute(&s, m, 1e-9).unwrap();
    (s, b)
}

fn samples(n: usize, f: impl Fn(f64) -> VectorField) -> Vec<VectorField> {
    (0..n).map(|i| f(i as f64 / n as f64)).collect()
}

fn scaled(v: &VectorField, s: f64) -> VectorField {
    let mut u = v.clone();
    u.scale(s);
    u
}

fn signal() -> FluxSignal {
    FluxSignal::new(1.0, 0.3, vec![0.8, 0.0], vec![-0.2, 0.4]).unwrap()
}

fn max_diff(a: &HarmonicSolution, b: &HarmonicSolution) -> f64 {
    let d = a.combine(-1.0, b).unwrap();
    d.max_coefficient()
}

#[test]
fn zero_force() {
    let (s, b) = setup(GeometryKind::Planar2D, 10, 6);
    let z = VectorField::zeros(&s.grid);
    let c = forcing_coeffs(&s, &b, 1.0, &samples(8, |_| z.clone()), None).unwrap();
    assert!(c.is_zero());
    assert_eq!(c.k_f, 2);
    let g = signal();
    let corr = flux_correction(&s, &b, &solve_forced_resolvent(&s, &b, &c, 0.5).unwrap(), &g).unwrap();
    assert_eq!(corr.g_tilde.p0, g.p0);
    let (v, _) = solve_t(&s, &b, &c, &g, 0.5, Method::Resolvent, false).unwrap();
    let stokes = solve_periodic_stokes(&s, &b, &g, 0.5, Method::Resolvent).unwrap();
    assert_eq!(max_diff(&v, &stokes), 0.0);
    let v1 = solve_forced_stokes(&s, &b, &c, 0.5).unwrap();
    assert!(v1.is_zero());
}

#[test]
fn eigenmode_force_has_one_coefficient() {
    let (s, b) = setup(GeometryKind::Axisym, 10, 6);
    let w1 = b.eigenfield(&s, 0);
    let c = forcing_coeffs(&s, &b, 1.0, &samples(16, |t| scaled(&w1, (2.0 * PI * t).cos())), Some(3)).unwrap();
    assert!((c.cos[0][0] - 1.0).abs() < 1e-10);
    let rest = c.zero.iter().chain(c.cos.iter().flatten().skip(1)).chain(c.sin.iter().flatten());
    assert!(rest.fold(0.0f64, |m, v| m.max(v.abs())) < 1e-10);
    assert!(c.discarded < 1e-12);
}

#[test]
fn gradient_force_is_invisible() {
    let (s, b) = setup(GeometryKind::Planar2D, 10, 6);
    let phi = ScalarField::from_fn(&s.grid, |x, z| x * x * (2.0 * PI * z).sin() + x);
    let gp = gradient(&s.grid, &phi).unwrap();
    let c = forcing_coeffs(&s, &b, 1.0, &samples(8, |t| scaled(&gp, 1.0 + t)), None).unwrap();
    let scale = crate::fields::norm(&s.grid, &gp).unwrap();
    assert!(c.max_coefficient() < 1e-10 * scale, "{}", c.max_coefficient());
    let v1 = solve_forced_resolvent(&s, &b, &c, 1.0).unwrap();
    assert!(v1.max_coefficient() < 1e-10 * scale);
    let g = signal();
    let corr = flux_correction(&s, &b, &v1, &g).unwrap();
    assert!((corr.g_tilde.p0 - g.p0).abs() < 1e-10);
}

#[test]
fn steady_eigenmode_response() {
    let (s, b) = setup(GeometryKind::Planar2D, 10, 6);
    let w1 = b.eigenfield(&s, 0);
    let c = forcing_coeffs(&s, &b, 1.0, &samples(4, |_| w1.clone()), None).unwrap();
    let l1 = b.eigenvalues[0];
    for nu in [0.5, 1.0] {
        for v1 in [solve_forced_stokes(&s, &b, &c, nu).unwrap(), solve_forced_resolvent(&s, &b, &c, nu).unwrap()] {
            for (x, w) in v1.a0.iter().zip(&b.eigenvectors[0]) {
                assert!((x - w / (nu * l1)).abs() < 1e-8, "{nu}");
            }
        }
    }
    let a = solve_forced_stokes(&s, &b, &c, 0.5).unwrap();
    let d = solve_forced_stokes(&s, &b, &c, 1.0).unwrap();
    for (x, y) in a.a0.iter().zip(&d.a0) {
        assert!((x - 2.0 * y).abs() <= 1e-15 * x.abs().max(1e-300) * 4.0);
    }
}

#[test]
fn zero_flux_cancels_forced_flux() {
    let (s, b) = setup(GeometryKind::Axisym, 10, 6);
    let f0 = VectorField::random(&s.grid, 3);
    let c = forcing_coeffs(&s, &b, 1.0, &samples(8, |t| scaled(&f0, (2.0 * PI * t).sin() + 0.5)), None).unwrap();
    let g = FluxSignal::new(1.0, 0.0, vec![0.0], vec![0.0]).unwrap();
    let (v, rep) = solve_t(&s, &b, &c, &g, 0.7, Method::Resolvent, false).unwrap();
    assert!(rep.g_tilde.p0.abs() > 1e-6);
    assert!(rep.z_deviation < 1e-8);
    for t in [0.0, 0.3] {
        let prof = flux_profile(&s.grid, &v.evaluate(&s, t)).unwrap();
        let vmax = v.evaluate(&s, t).max_abs();
        assert!(prof.rows.iter().all(|r| r.abs() <= 1e-8 * vmax), "{:?}", prof.rows);
    }
}

#[test]
fn momentum_residual_and_superposition() {
    let (s, b) = setup(GeometryKind::Axisym, 10, 6);
    let f0 = VectorField::random(&s.grid, 5);
    let f1 = VectorField::random(&s.grid, 6);
    let force = |t: f64| {
        let mut u = scaled(&f0, 0.1 * (2.0 * PI * t).cos());
        u.axpy(0.05, &f1);
        u
    };
    let c = forcing_coeffs(&s, &b, 1.0, &samples(8, force), None).unwrap();
    let g = signal();
    let nu = 0.6;
    let (v, rep) = solve_t(&s, &b, &c, &g, nu, Method::Resolvent, true).unwrap();
    assert!(rep.momentum_residual < 1e-6, "{}", rep.momentum_residual);
    assert!(v.max_flux_error(&s, &g, 8).unwrap() < 1e-8);
    let zero_g = FluxSignal::new(1.0, 0.0, vec![0.0], vec![0.0]).unwrap();
    let zf = VectorField::zeros(&s.grid);
    let c0 = forcing_coeffs(&s, &b, 1.0, &samples(8, |_| zf.clone()), None).unwrap();
    let (vf, _) = solve_t(&s, &b, &c, &zero_g, nu, Method::Resolvent, false).unwrap();
    let (vg, _) = solve_t(&s, &b, &c0, &g, nu, Method::Resolvent, false).unwrap();
    let sum = vf.combine(1.0, &vg).unwrap();
    assert!(max_diff(&v, &sum) < 1e-10 * v.max_coefficient());
}

#[test]
fn galerkin_and_full_agree_on_eigenmode_force() {
    let (s, b) = setup(GeometryKind::Planar2D, 10, 6);
    let w2 = b.eigenfield(&s, 1);
    let c = forcing_coeffs(&s, &b, 1.0, &samples(8, |t| scaled(&w2, (2.0 * PI * t).sin() + 0.3)), None).unwrap();
    let a = solve_forced_stokes(&s, &b, &c, 0.4).unwrap();
    let r = solve_forced_resolvent(&s, &b, &c, 0.4).unwrap();
    assert!(max_diff(&a, &r) < 1e-8 * r.max_coefficient());
}

#[test]
fn too_few_samples() {
    let (s, b) = setup(GeometryKind::Planar2D, 8, 4);
    let z = VectorField::zeros(&s.grid);
    assert!(forcing_coeffs(&s, &b, 1.0, &samples(3, |_| z.clone()), None).is_err());
    assert!(forcing_coeffs(&s, &b, 1.0, &samples(7, |_| z.clone()), Some(2)).is_err());
}
