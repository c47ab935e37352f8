//! Block shift-invert Lanczos for the smallest eigenpairs of `K x = lambda M x`
//! with `K`, `M` symmetric positive definite.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{PerifluxError, Result};
use crate::linalg::dot;

/// Operators of the pencil. `solve_k` applies `K^{-1}`, `solve_m` applies `M^{-1}`.
pub trait Pencil: Sync {
    fn dim(&self) -> usize;
    fn apply_k(&self, x: &[f64]) -> Vec<f64>;
    fn apply_m(&self, x: &[f64]) -> Vec<f64>;
    fn solve_k(&self, b: &[f64]) -> Vec<f64>;
    fn solve_m(&self, b: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct EigenOutput {
    pub values: Vec<f64>,
    /// `M`-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    /// `||M^{-1} K x - lambda x||_M` per pair.
    pub residuals: Vec<f64>,
    pub krylov_dim: usize,
}

const BLOCK: usize = 4;

struct Basis<'a, P: Pencil> {
    pencil: &'a P,
    v: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
}

impl<'a, P: Pencil> Basis<'a, P> {
    /// M-orthogonalizes `x` against the basis (twice) and appends it unless it
    /// is numerically dependent. Returns whether it was kept.
    fn push(&mut self, mut x: Vec<f64>) -> bool {
        let mx0 = self.pencil.apply_m(&x);
        let n0 = dot(&x, &mx0).max(0.0).sqrt();
        if n0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            let coefs: Vec<f64> = self.mv.par_iter().map(|mv| dot(mv, &x)).collect();
            for (c, v) in coefs.iter().zip(&self.v) {
                for (a, b) in x.iter_mut().zip(v) {
                    *a -= c * b;
                }
            }
        }
        let mx = self.pencil.apply_m(&x);
        let n = dot(&x, &mx).max(0.0).sqrt();
        if n <= 1e-10 * n0 {
            return false;
        }
        x.iter_mut().for_each(|a| *a /= n);
        self.mv.push(mx.into_iter().map(|a| a / n).collect());
        self.v.push(x);
        true
    }
}

/// The `m` smallest eigenpairs with residual at most `tol`.
pub fn smallest_eigenpairs<P: Pencil>(pencil: &P, m: usize, tol: f64, seed: u64) -> Result<EigenOutput> {
    let n = pencil.dim();
    if m == 0 {
        return Err(PerifluxError::invalid("m", "must be at least 1"));
    }
    if 2 * m > n {
        return Err(PerifluxError::invalid(
            "m",
            format!("{m} modes requested but the discrete space has dimension {n}"),
        ));
    }
    if !(tol > 0.0) {
        return Err(PerifluxError::invalid("tol", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis = Basis {
        pencil,
        v: Vec::new(),
        mv: Vec::new(),
    };
    let mut block: Vec<Vec<f64>> = (0..BLOCK)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    // Smooth the random start so it has little weight on the top of the spectrum.
    block = block.par_iter().map(|b| pencil.solve_k(&pencil.apply_m(b))).collect();
    let mut target = (2 * m + 40).min(n);
    let mut last = None;
    loop {
        while basis.v.len() < target {
            let mut kept = Vec::new();
            for b in block.drain(..) {
                if basis.push(b) {
                    kept.push(basis.v.len() - 1);
                }
            }
            if kept.is_empty() {
                // Invariant subspace reached: restart with fresh directions.
                block = (0..BLOCK)
                    .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect();
                if basis.v.len() >= n {
                    break;
                }
                continue;
            }
            block = kept
                .par_iter()
                .map(|&i| pencil.solve_k(&basis.mv[i]))
                .collect();
        }
        let out = rayleigh_ritz(pencil, &basis.v, m)?;
        let worst = out.residuals.iter().cloned().fold(0.0, f64::max);
        if worst <= tol {
            return Ok(out);
        }
        if target >= n || basis.v.len() >= n {
            return Err(PerifluxError::SolverFailure {
                context: format!("eigensolver with {} Krylov vectors", basis.v.len()),
                residual: worst,
                iterations: basis.v.len(),
            });
        }
        if let Some(prev) = last {
            if worst > 0.999 * prev && basis.v.len() > 6 * m + 200 {
                return Err(PerifluxError::SolverFailure {
                    context: "eigensolver stagnated".into(),
                    residual: worst,
                    iterations: basis.v.len(),
                });
            }
        }
        last = Some(worst);
        target = (target + target / 2).min(n);
    }
}

fn rayleigh_ritz<P: Pencil>(pencil: &P, v: &[Vec<f64>], m: usize) -> Result<EigenOutput> {
    let k = v.len();
    let kv: Vec<Vec<f64>> = v.par_iter().map(|x| pencil.apply_k(x)).collect();
    let mut h = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let s = 0.5 * (dot(&kv[i], &v[j]) + dot(&kv[j], &v[i]));
            h[(i, j)] = s;
            h[(j, i)] = s;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = pencil.dim();
    let pairs: Vec<(f64, Vec<f64>, f64)> = order[..m.min(k)]
        .par_iter()
        .map(|&c| {
            let lambda = eig.eigenvalues[c];
            let mut x = vec![0.0; n];
            for (i, vi) in v.iter().enumerate() {
                let y = eig.eigenvectors[(i, c)];
                for (a, b) in x.iter_mut().zip(vi) {
                    *a += y * b;
                }
            }
            let kx = pencil.apply_k(&x);
            let mx = pencil.apply_m(&x);
            let s: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
            let r = dot(&s, &pencil.solve_m(&s)).max(0.0).sqrt();
            (lambda, x, r)
        })
        .collect();
    if pairs.iter().any(|p| !(p.0 > 0.0)) {
        return Err(PerifluxError::SolverFailure {
            context: "eigensolver produced a non-positive eigenvalue".into(),
            residual: f64::NAN,
            iterations: k,
        });
    }
    let mut out = EigenOutput {
        values: Vec::with_capacity(m),
        vectors: Vec::with_capacity(m),
        residuals: Vec::with_capacity(m),
        krylov_dim: k,
    };
    for (l, x, r) in pairs {
        out.values.push(l);
        out.vectors.push(x);
        out.residuals.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Diagonal pencil with a doubly degenerate spectrum.
    struct Diag {
        k: Vec<f64>,
        m: Vec<f64>,
    }

    impl Pencil for Diag {
        fn dim(&self) -> usize {
            self.k.len()
        }
        fn apply_k(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.k).map(|(a, b)| a * b).collect()
        }
        fn apply_m(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.m).map(|(a, b)| a * b).collect()
        }
        fn solve_k(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.k).map(|(a, b)| a / b).collect()
        }
        fn solve_m(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.m).map(|(a, b)| a / b).collect()
        }
    }

    #[test]
    fn finds_degenerate_pairs() {
        let n = 300;
        let k: Vec<f64> = (0..n).map(|i| (1 + i / 2) as f64).collect();
        let m: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i * 7) % 3) as f64).collect();
        let kk: Vec<f64> = k.iter().zip(&m).map(|(a, b)| a * b).collect();
        let p = Diag { k: kk, m };
        let out = smallest_eigenpairs(&p, 10, 1e-9, 1).unwrap();
        for (j, l) in out.values.iter().enumerate() {
            assert!((l - (1 + j / 2) as f64).abs() < 1e-9, "{j} {l}");
        }
        for i in 0..10 {
            for j in 0..10 {
                let g = dot(&out.vectors[i], &p.apply_m(&out.vectors[j]));
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((g - d).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_too_many_modes() {
        let p = Diag {
            k: vec![1.0; 10],
            m: vec![1.0; 10],
        };
        assert!(smallest_eigenpairs(&p, 6, 1e-8, 0).is_err());
    }
}
