//! Preconditioned conjugate gradients.

use super::dot;

#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final preconditioned-free residual norm relative to the right-hand side.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` for symmetric positive (semi)definite `A` with Jacobi
/// preconditioning. With `nullspace` set, the constant vector is removed from
/// the residual and iterate each step (singular systems with a constant kernel).
pub fn pcg<F>(
    apply: F,
    diag: &[f64],
    b: &[f64],
    tol: f64,
    maxit: usize,
    nullspace: bool,
) -> (Vec<f64>, CgOutcome)
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let remove_mean = |v: &mut [f64]| {
        if nullspace && n > 0 {
            let m = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|x| *x -= m);
        }
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    remove_mean(&mut r);
    let bnorm = dot(&r, &r).sqrt();
    if bnorm == 0.0 {
        return (
            x,
            CgOutcome {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let inv: Vec<f64> = diag.iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    remove_mean(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = 1.0;
    for it in 1..=maxit {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return (
                x,
                CgOutcome {
                    iterations: it,
                    relative_residual: rel,
                    converged: false,
                },
            );
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        remove_mean(&mut r);
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            remove_mean(&mut x);
            return (
                x,
                CgOutcome {
                    iterations: it,
                    relative_residual: rel,
                    converged: true,
                },
            );
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        remove_mean(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    remove_mean(&mut x);
    (
        x,
        CgOutcome {
            iterations: maxit,
            relative_residual: rel,
            converged: false,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_laplacian_with_nullspace() {
        let n = 64;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = 2.0 * x[i] - x[(i + 1) % n] - x[(i + n - 1) % n];
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
        let (x, out) = pcg(apply, &vec![2.0; n], &b, 1e-12, 500, true);
        assert!(out.converged);
        let mut y = vec![0.0; n];
        apply(&x, &mut y);
        for i in 0..n {
            assert!((y[i] - b[i]).abs() < 1e-10);
        }
        assert!(x.iter().sum::<f64>().abs() < 1e-10);
    }
}
