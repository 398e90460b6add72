//! Restarted Lanczos for the lowest eigenpair of a hermitian operator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sparse::LinearOperator;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Target for `||H x - E x||` with `||x|| = 1`.
    pub tol: f64,
    /// Krylov dimension per cycle.
    pub krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Above this dimension full reorthogonalization is replaced by the partial scheme.
    pub full_reorth_limit: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            krylov: 160,
            max_restarts: 400,
            seed: 0x5eed,
            full_reorth_limit: 200_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    /// Unit l2 vector.
    pub vector: Vec<Complex64>,
    pub residual: f64,
    pub matvecs: usize,
    pub restarts: usize,
}

// Reductions run over fixed chunks and combine the partial sums in order, so results
// do not depend on the thread count or on work stealing.
const CHUNK: usize = 4096;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let partial: Vec<Complex64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum())
        .collect();
    partial.into_iter().sum()
}

fn norm(a: &[Complex64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .map(|x| x.iter().map(|p| p.norm_sqr()).sum())
        .collect();
    partial.into_iter().sum::<f64>().sqrt()
}

fn axpy(y: &mut [Complex64], s: Complex64, x: &[Complex64]) {
    y.par_iter_mut().with_min_len(CHUNK).zip(x).for_each(|(a, b)| *a += s * b);
}

fn scale(y: &mut [Complex64], s: f64) {
    y.par_iter_mut().with_min_len(CHUNK).for_each(|a| *a *= s);
}

fn orthogonalize(w: &mut [Complex64], basis: &[Vec<Complex64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(w, -c, v);
        }
    }
}

/// Lowest eigenpair of `op`. `start` (if given) seeds the first Krylov space, so the
/// returned value never exceeds its Rayleigh quotient.
pub fn lowest_eigenpair(op: &dyn LinearOperator, opts: &LanczosOptions, start: Option<&[Complex64]>) -> Result<Eigenpair> {
    if !op.is_hermitian() {
        return Err(Error::Validation("Lanczos requires a hermitian operator".into()));
    }
    let n = op.dim();
    if n == 0 {
        return Err(Error::Validation("empty operator".into()));
    }
    let mut v0: Vec<Complex64> = match start {
        Some(s) if s.len() == n && norm(s) > 0.0 => s.to_vec(),
        Some(s) if s.len() != n => {
            return Err(Error::Validation(format!("start vector has length {} for dimension {n}", s.len())))
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        }
    };
    let nv = norm(&v0);
    scale(&mut v0, 1.0 / nv);
    let m = opts.krylov.max(2).min(n);
    let full = n <= opts.full_reorth_limit;
    let mut matvecs = 0;
    let mut best = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = vec![v0.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut omega_prev: Vec<f64> = Vec::new();
        let mut omega: Vec<f64> = vec![1.0];
        let mut force_next = false;
        let mut w = vec![Complex64::default(); n];
        let eps = f64::EPSILON;
        let mut anorm: f64 = 0.0;
        for k in 0..m {
            op.apply_into(&basis[k], &mut w);
            matvecs += 1;
            if k > 0 {
                let b = betas[k - 1];
                axpy(&mut w, Complex64::new(-b, 0.0), &basis[k - 1]);
            }
            let a = dot(&basis[k], &w).re;
            axpy(&mut w, Complex64::new(-a, 0.0), &basis[k]);
            alphas.push(a);
            if full {
                orthogonalize(&mut w, &basis);
            }
            let mut b = norm(&w);
            anorm = anorm.max(a.abs() + b);
            if !full {
                // Estimate loss of orthogonality with the omega recurrence.
                let mut next = vec![0.0; k + 2];
                for j in 0..k {
                    let mut x = betas.get(j).copied().unwrap_or(0.0) * omega.get(j + 1).copied().unwrap_or(0.0)
                        + (alphas[j] - a) * omega[j];
                    if j > 0 {
                        x += betas[j - 1] * omega[j - 1];
                    }
                    if k > 0 {
                        x -= betas[k - 1] * omega_prev.get(j).copied().unwrap_or(0.0);
                    }
                    next[j] = (x + eps * anorm * 2.0 * (n as f64).sqrt()) / b.max(f64::MIN_POSITIVE);
                }
                next[k] = eps * (n as f64).sqrt();
                next[k + 1] = 1.0;
                let lost = next[..=k].iter().any(|x| x.abs() > eps.sqrt());
                if lost || force_next {
                    orthogonalize(&mut w, &basis);
                    b = norm(&w);
                    for x in next[..=k].iter_mut() {
                        *x = eps;
                    }
                    force_next = lost;
                }
                omega_prev = omega;
                omega = next;
            }
            if b <= 1e-13 * anorm.max(1.0) || k + 1 == m {
                break;
            }
            scale(&mut w, 1.0 / b);
            betas.push(b);
            basis.push(std::mem::replace(&mut w, vec![Complex64::default(); n]));
        }

        let dim_t = alphas.len();
        let t = DMatrix::from_fn(dim_t, dim_t, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let (_, vectors) = linalg::real_symmetric_eigen(&t);
        let mut x = vec![Complex64::default(); n];
        for (i, v) in basis.iter().take(dim_t).enumerate() {
            axpy(&mut x, Complex64::new(vectors[(i, 0)], 0.0), v);
        }
        let nx = norm(&x);
        scale(&mut x, 1.0 / nx);
        op.apply_into(&x, &mut w);
        matvecs += 1;
        let rq = dot(&x, &w).re;
        axpy(&mut w, Complex64::new(-rq, 0.0), &x);
        let residual = norm(&w);
        if !residual.is_finite() {
            return Err(Error::NumericalFailure("non-finite Lanczos residual".into()));
        }
        best = best.min(residual);
        if residual <= opts.tol {
            return Ok(Eigenpair {
                value: rq,
                vector: x,
                residual,
                matvecs,
                restarts: restart,
            });
        }
        v0 = x;
    }
    Err(Error::NonConvergence {
        best_residual: best,
        iterations: matvecs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::sparse::SparseOperator;

    fn random_hermitian(n: usize, seed: u64) -> SparseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, Complex64::new(rng.random_range(-1.0..1.0) + i as f64 * 0.01, 0.0)));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v = Complex64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
                    t.push((i, j, v));
                    t.push((j, i, v.conj()));
                }
            }
        }
        SparseOperator::from_triplets(n, t).unwrap().mark_hermitian(1e-14).unwrap()
    }

    #[test]
    fn matches_dense_eigensolver() {
        for (n, seed) in [(7, 1), (60, 2), (400, 3)] {
            let h = random_hermitian(n, seed);
            let dense = linalg::hermitian_eigen(&h.to_dense()).values[0];
            let r = lowest_eigenpair(&h, &LanczosOptions::default(), None).unwrap();
            assert!((r.value - dense).abs() <= 1e-10, "{n}: {} vs {dense}", r.value);
            assert!(r.residual <= 1e-9);
        }
    }

    #[test]
    fn partial_reorthogonalization_path() {
        let h = random_hermitian(500, 4);
        let dense = linalg::hermitian_eigen(&h.to_dense()).values[0];
        let opts = LanczosOptions {
            full_reorth_limit: 10,
            ..Default::default()
        };
        let r = lowest_eigenpair(&h, &opts, None).unwrap();
        assert!((r.value - dense).abs() <= 1e-10);
    }

    #[test]
    fn rejects_non_hermitian_and_respects_trial() {
        let a = SparseOperator::from_triplets(2, vec![(0, 1, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(lowest_eigenpair(&a, &LanczosOptions::default(), None), Err(Error::Validation(_))));
        let h = random_hermitian(50, 5);
        let trial: Vec<Complex64> = (0..50).map(|i| Complex64::new(1.0 / (1.0 + i as f64), 0.0)).collect();
        let r = lowest_eigenpair(&h, &LanczosOptions::default(), Some(&trial)).unwrap();
        assert!(r.value <= h.rayleigh_quotient(&trial) + 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let h = random_hermitian(300, 6);
        let opts = LanczosOptions {
            tol: 1e-15,
            krylov: 3,
            max_restarts: 2,
            ..Default::default()
        };
        match lowest_eigenpair(&h, &opts, None) {
            Err(Error::NonConvergence { best_residual, .. }) => assert!(best_residual > 0.0),
            other => panic!("{other:?}"),
        }
    }
}
