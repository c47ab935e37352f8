use super::*;
use crate::fields::{DivFreeSpace, VectorField};
use crate::forcing::{forcing_coeffs, solve_forced_resolvent};
use crate::geometry::{build_grid, GeometryKind, PipeProfile};
use crate::harmonic::{solve_periodic_stokes, FluxSignal, Method};
use crate::spectrum::{eigenpairs, SpectralBasis};
use std::f64::consts::PI;

fn space(kind: GeometryKind, eps: f64, n: usize) -> DivFreeSpace {
    let p = if eps == 0.0 {
        PipeProfile::straight(1.0, 1.0).unwrap()
    } else {
        PipeProfile::sinusoidal(1.0, eps, 1.0).unwrap()
    };
    DivFreeSpace::new(&build_grid(&p, kind, n, n).unwrap()).unwrap()
}

#[test]
fn identical_fields_compare_to_zero() {
    let s = space(GeometryKind::Axisym, 0.2, 8);
    let u = VectorField::random(&s.grid, 1);
    let d = compare(&s.grid, &u, &u).unwrap();
    assert_eq!(d, DiffReport { rel_l2: 0.0, rel_max: 0.0, rel_flux: 0.0 });
}

#[test]
fn zero_flux_orbit_is_zero() {
    let s = space(GeometryKind::Planar2D, 0.2, 8);
    let g = FluxSignal::new(1.0, 0.0, vec![0.0], vec![0.0]).unwrap();
    let o = timestep_periodic(&s, Drive::Flux(&g), 1.0, 1.0 / 64.0, 3, 1e-10, None).unwrap();
    assert_eq!(o.periods_run, 1);
    assert!(o.states.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn step_size_is_checked() {
    let s = space(GeometryKind::Planar2D, 0.0, 8);
    let g = FluxSignal::new(1.0, 0.0, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
    assert!(timestep_periodic(&s, Drive::Flux(&g), 1.0, 1.0 / 64.0, 3, 1e-10, None).is_err());
}

#[test]
fn unforced_contraction_matches_first_eigenvalue() {
    for eps in [0.0, 0.2] {
        let s = space(GeometryKind::Axisym, eps, 10);
        let lam = eigenpairs(&s, 1, 1e-9).unwrap().values[0];
        let nu = 0.1;
        let q = contraction_factor(&s, nu, 1.0, 1.0 / 128.0, 12, 7).unwrap();
        let ex = (-nu * lam).exp();
        assert!((q / ex - 1.0).abs() < 0.05, "{q} {ex}");
    }
}

#[test]
fn stepped_orbit_matches_frequency_solution() {
    let s = space(GeometryKind::Axisym, 0.2, 10);
    let b = SpectralBasis::constants_only(&s, 1e-10).unwrap();
    let g = FluxSignal::new(1.0, 0.5, vec![1.0], vec![0.3]).unwrap();
    let nu = 0.5;
    let sol = solve_periodic_stokes(&s, &b, &g, nu, Method::Resolvent).unwrap();
    let o = timestep_periodic(&s, Drive::Flux(&g), nu, 1.0 / 128.0, 60, 1e-9, None).unwrap();
    let a: Vec<VectorField> = o.states.iter().map(|x| s.field(x)).collect();
    let r: Vec<VectorField> = o.times().iter().map(|t| sol.evaluate(&s, *t)).collect();
    let d = compare_series(&s.grid, &a, &r).unwrap();
    assert!(d.rel_l2 < 1e-3, "{d:?}");
    assert!(d.rel_flux < 1e-10, "{d:?}");
}

#[test]
fn forced_period_map_fixes_the_frequency_solution() {
    let s = space(GeometryKind::Planar2D, 0.2, 10);
    let b = SpectralBasis::constants_only(&s, 1e-10).unwrap();
    let f0 = VectorField::random(&s.grid, 4);
    let samples: Vec<VectorField> = (0..8)
        .map(|i| {
            let mut u = f0.clone();
            u.scale(1.0 + (2.0 * PI * i as f64 / 8.0).cos());
            u
        })
        .collect();
    let c = forcing_coeffs(&s, &b, 1.0, &samples, Some(1)).unwrap();
    let v1 = solve_forced_resolvent(&s, &b, &c, 0.5).unwrap();
    let x0 = v1.reduced(0.0);
    let x1 = period_map(&s, Drive::Force(&c), 0.5, 1.0 / 128.0, &x0).unwrap();
    let d: Vec<f64> = x1.iter().zip(&x0).map(|(a, b)| a - b).collect();
    let rel = (s.inner(&d, &d) / s.inner(&x0, &x0)).sqrt();
    assert!(rel < 1e-3, "{rel}");
}

#[test]
fn swirl_decays_with_energy_balance() {
    let s = space(GeometryKind::Axisym, 0.2, 10);
    let z = swirl_decay_check(&s, &VectorField::zeros(&s.grid), 1.0, 0.01, 10).unwrap();
    assert!(z.energies.iter().all(|e| *e == 0.0));
    let u = VectorField::random(&s.grid, 9);
    let full = swirl_decay_check(&s, &u, 1.0, 0.01, 100_000).unwrap();
    assert!(full.monotone);
    assert!(full.final_ratio <= 1e-10);
    assert!(full.midpoint_defect < 1e-12, "{}", full.midpoint_defect);
    // Trapezoid audit over a fixed time with smooth data is second order.
    let smooth = VectorField::from_fn(&s.grid, |_, _| 0.0, |_, _| 0.0, |x, z| x * (1.0 - x * x) * (1.0 + 0.3 * (2.0 * PI * z).cos()));
    let a = swirl_decay_check(&s, &smooth, 0.5, 0.02, 10).unwrap();
    let b = swirl_decay_check(&s, &smooth, 0.5, 0.01, 20).unwrap();
    assert!(a.trapezoid_defect / b.trapezoid_defect > 3.5, "{} {}", a.trapezoid_defect, b.trapezoid_defect);
}

#[test]
fn frequency_solutions_carry_no_swirl() {
    let s = space(GeometryKind::Axisym, 0.2, 8);
    let b = SpectralBasis::constants_only(&s, 1e-10).unwrap();
    let g = FluxSignal::new(1.0, 0.5, vec![1.0], vec![0.3]).unwrap();
    let sol = solve_periodic_stokes(&s, &b, &g, 0.5, Method::Resolvent).unwrap();
    assert!(max_swirl(&s, &sol) <= 1e-12);
}

#[test]
fn radial_oracle_against_solver() {
    let s = space(GeometryKind::Axisym, 0.0, 16);
    let b = SpectralBasis::constants_only(&s, 1e-10).unwrap();
    let g = FluxSignal::new(1.0, 0.0, vec![1.0], vec![0.0]).unwrap();
    let sol = solve_periodic_stokes(&s, &b, &g, 1.0, Method::Resolvent).unwrap();
    let o = womersley_radial(GeometryKind::Axisym, 1.0, 1.0, &g, 1024).unwrap();
    let d = compare(&s.grid, &sol.evaluate(&s, 0.2), &o.field(&s.grid, 0.2).unwrap()).unwrap();
    assert!(d.rel_l2 < 1e-2, "{d:?}");
    let wavy = space(GeometryKind::Axisym, 0.2, 8);
    assert!(o.field(&wavy.grid, 0.0).is_err());
}
